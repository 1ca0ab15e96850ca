//! Joint bandwidth and power allocation for users of one base station.
//!
//! Every user starts from an equal share `(Pt, W0)` with only its pilot count
//! optimized. Users may then trade power and bandwidth subject to the pooled
//! budgets, with no user ending below its equal-share rate and no user holding
//! more bandwidth than its own rate-maximizing amount.
//!
//! The two-user search scans the weak user's power on a 0.1 dB grid (coarse
//! 1 dB pass, then a fine pass around the best coarse point) and places
//! bandwidth on each user's `Bc` lattice. Larger groups apply the pair search
//! greedily to one pair at a time; that part is a heuristic.

use std::io::Read;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{read_numeric_rows, FadingModel};
use crate::siso::{best_pilots, solve_snr, CoherenceBlock, PowerDensity};
use crate::units::{db_to_linear, dbm_to_watts, noise_psd_w_per_hz};

/// Lower end of the power search relative to the starting power, dB.
pub const POWER_FLOOR_DB: f64 = -20.0;
pub const COARSE_STEP_DB: f64 = 1.0;
pub const FINE_STEP_DB: f64 = 0.1;

/// Relative objective gain below which the group heuristic stops.
pub const GROUP_IMPROVEMENT_TOL: f64 = 1e-6;
const MAX_GROUP_ROUNDS: usize = 100;
const SCAN_LIMIT: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    MaxWeakRate,
    MaxStrongRate,
    SumRate,
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-weak" | "max-weak-rate" => Ok(Objective::MaxWeakRate),
            "max-strong" | "max-strong-rate" => Ok(Objective::MaxStrongRate),
            "sum" | "sum-rate" => Ok(Objective::SumRate),
            _ => Err(Error::config(format!(
                "unknown objective {s:?}; expected max-weak, max-strong or sum"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLink {
    /// Combined linear channel gain `g` (path loss and beamforming).
    pub gain: f64,
    pub baseline_power_w: f64,
    pub baseline_bandwidth_hz: f64,
    pub n0_w_per_hz: f64,
    pub cb: CoherenceBlock,
    pub fading: FadingModel,
}

impl UserLink {
    pub fn new(
        gain: f64,
        baseline_power_w: f64,
        baseline_bandwidth_hz: f64,
        n0_w_per_hz: f64,
        cb: CoherenceBlock,
        fading: FadingModel,
    ) -> Result<Self> {
        for (name, v) in [
            ("gain", gain),
            ("baseline power", baseline_power_w),
            ("baseline bandwidth", baseline_bandwidth_hz),
            ("noise density", n0_w_per_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} {v} must be finite and > 0")));
            }
        }
        Ok(UserLink { gain, baseline_power_w, baseline_bandwidth_hz, n0_w_per_hz, cb, fading })
    }

    /// `Pr/N0` at transmit power `p_w`.
    pub fn power_density(&self, p_w: f64) -> f64 {
        p_w * self.gain / self.n0_w_per_hz
    }
}

/// Reads `gain_db, pt_dbm, w0_hz` rows; a header row is optional.
pub fn users_from_csv<R: Read>(
    reader: R,
    noise_figure_db: f64,
    cb: CoherenceBlock,
    fading: &FadingModel,
) -> Result<Vec<UserLink>> {
    let n0 = noise_psd_w_per_hz(noise_figure_db);
    read_numeric_rows(reader, 3, "user")?
        .into_iter()
        .map(|r| UserLink::new(db_to_linear(r[0]), dbm_to_watts(r[1]), r[2], n0, cb, fading.clone()))
        .collect()
}

/// Synthetic users with log-normal gains. For demonstrations and tests only;
/// these are not measured SINR statistics.
pub fn synthetic_users<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    mean_gain_db: f64,
    sigma_db: f64,
    template: &UserLink,
) -> Result<Vec<UserLink>> {
    let normal = Normal::new(mean_gain_db, sigma_db)
        .map_err(|e| Error::domain(format!("bad gain distribution: {e}")))?;
    (0..count)
        .map(|_| {
            let g = db_to_linear(normal.sample(rng));
            UserLink::new(
                g,
                template.baseline_power_w,
                template.baseline_bandwidth_hz,
                template.n0_w_per_hz,
                template.cb,
                template.fading.clone(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserAllocation {
    pub power_w: f64,
    pub bandwidth_hz: f64,
    pub pilots: u64,
    pub rate_bps: f64,
    pub baseline_rate_bps: f64,
}

impl UserAllocation {
    pub fn rate_gain_pct(&self) -> f64 {
        100.0 * (self.rate_bps / self.baseline_rate_bps - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationWarning {
    /// The chosen power split sits at the lower end of the search grid.
    PowerGridEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub objective: Objective,
    /// In input order.
    pub users: Vec<UserAllocation>,
    pub objective_value: f64,
    pub sum_rate_bps: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<AllocationWarning>,
}

impl Allocation {
    pub fn total_power_w(&self) -> f64 {
        self.users.iter().map(|u| u.power_w).sum()
    }

    pub fn total_bandwidth_hz(&self) -> f64 {
        self.users.iter().map(|u| u.bandwidth_hz).sum()
    }
}

/// Rate evaluation for one user with its optimal operating SNR cached.
struct Link<'a> {
    u: &'a UserLink,
    rho_star: f64,
}

impl<'a> Link<'a> {
    fn new(u: &'a UserLink) -> Result<Self> {
        let rho_star = solve_snr(u.cb.coherence_length(), &u.fading)?.rho;
        Ok(Link { u, rho_star })
    }

    fn bc(&self) -> f64 {
        self.u.cb.bc()
    }

    /// Best pilot count and rate at `(p_w, w_hz)`.
    fn rate(&self, p_w: f64, w_hz: f64) -> Result<(u64, f64)> {
        if p_w <= 0.0 || w_hz <= 0.0 {
            return Ok((0, 0.0));
        }
        let pd = PowerDensity::new(self.u.power_density(p_w))?;
        best_pilots(pd, w_hz, self.u.cb.coherence_length(), &self.u.fading)
    }

    fn lattice_rate(&self, p_w: f64, m: u64) -> Result<f64> {
        Ok(self.rate(p_w, m as f64 * self.bc())?.1)
    }

    /// Rate-maximizing bandwidth multiple at power `p_w`.
    fn cap(&self, p_w: f64) -> Result<u64> {
        if p_w <= 0.0 {
            return Ok(0);
        }
        let w_star = self.u.power_density(p_w) / self.rho_star;
        let mut m = ((w_star / self.bc()).round() as u64).max(1);
        let mut best = self.lattice_rate(p_w, m)?;
        for step in [1i64, -1] {
            loop {
                let next = m as i64 + step;
                if next < 1 {
                    break;
                }
                let r = self.lattice_rate(p_w, next as u64)?;
                if r > best {
                    best = r;
                    m = next as u64;
                } else {
                    break;
                }
            }
        }
        Ok(m)
    }

    fn baseline(&self) -> Result<f64> {
        Ok(self.rate(self.u.baseline_power_w, self.u.baseline_bandwidth_hz)?.1)
    }
}

/// Rate-maximizing bandwidth of a user on its own `Bc` lattice at power `p_w`.
pub fn standalone_bandwidth(u: &UserLink, p_w: f64) -> Result<f64> {
    Ok(Link::new(u)?.cap(p_w)? as f64 * u.cb.bc())
}

/// Equal-share rate of every user, pilot count optimized at `W0`.
pub fn baseline_rates(users: &[UserLink]) -> Result<Vec<f64>> {
    if users.is_empty() {
        return Err(Error::domain("no users"));
    }
    users.iter().map(|u| Link::new(u)?.baseline()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PairTarget {
    First,
    Second,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PairPoint {
    p: [f64; 2],
    w: [f64; 2],
    n: [u64; 2],
    r: [f64; 2],
    grid_edge: bool,
}

impl PairPoint {
    fn score(&self, target: PairTarget) -> (f64, f64) {
        let sum = self.r[0] + self.r[1];
        match target {
            PairTarget::First => (self.r[0], sum),
            PairTarget::Second => (self.r[1], sum),
            PairTarget::Sum => (sum, sum),
        }
    }
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    let tol = 1e-12 * b.0.abs().max(1e-300);
    a.0 > b.0 + tol || ((a.0 - b.0).abs() <= tol && a.1 > b.1 * (1.0 + 1e-12))
}

struct Pair<'a, 'b> {
    links: [&'b Link<'a>; 2],
    floors: [f64; 2],
    p_total: f64,
    w_total: f64,
    target: PairTarget,
}

impl Pair<'_, '_> {
    fn evaluate(&self, p: [f64; 2], w: [f64; 2], grid_edge: bool) -> Result<Option<PairPoint>> {
        let a = self.links[0].rate(p[0], w[0])?;
        let b = self.links[1].rate(p[1], w[1])?;
        if a.1 < self.floors[0] || b.1 < self.floors[1] {
            return Ok(None);
        }
        Ok(Some(PairPoint { p, w, n: [a.0, b.0], r: [a.1, b.1], grid_edge }))
    }

    /// Start point with each bandwidth cut to its cap and the freed bandwidth
    /// handed to the other user, up to that user's cap.
    fn capped(&self, start: &PairPoint, first: usize) -> Result<Option<PairPoint>> {
        let second = 1 - first;
        let p = start.p;
        let caps = [
            self.links[0].cap(p[0])? as f64 * self.links[0].bc(),
            self.links[1].cap(p[1])? as f64 * self.links[1].bc(),
        ];
        let mut w = [0.0; 2];
        w[first] = start.w[first].min(caps[first]);
        w[second] = caps[second].min(self.w_total - w[first]);
        w[first] = caps[first].min(self.w_total - w[second]).max(w[first]);
        self.evaluate(p, w, false)
    }

    /// Best lattice bandwidth split for a fixed power split, if any is feasible.
    fn at_power(&self, p: [f64; 2], grid_edge: bool) -> Result<Option<PairPoint>> {
        let [l0, l1] = self.links;
        let (bc0, bc1) = (l0.bc(), l1.bc());
        let cap0 = l0.cap(p[0])?;
        let cap1_w = l1.cap(p[1])? as f64 * bc1;
        let m_top = cap0.min((self.w_total / bc0).floor() as u64);
        if m_top == 0 {
            return Ok(None);
        }
        let w1 = |m: u64| cap1_w.min(self.w_total - m as f64 * bc0);
        let r0 = |m: u64| l0.lattice_rate(p[0], m);
        let r1 = |m: u64| -> Result<f64> { Ok(l1.rate(p[1], w1(m))?.1) };

        // r0 grows with m up to the cap and r1 shrinks, so each fairness
        // constraint cuts the range at one end
        if r0(m_top)? < self.floors[0] {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0u64, m_top);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if r0(mid)? >= self.floors[0] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let m_lo = hi;
        if r1(m_lo)? < self.floors[1] {
            return Ok(None);
        }
        let (mut lo, mut hi) = (m_lo, m_top + 1);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if r1(mid)? >= self.floors[1] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m_hi = lo;

        let m = match self.target {
            PairTarget::First => m_hi,
            PairTarget::Second => m_lo,
            PairTarget::Sum => {
                let sum = |m: u64| -> Result<f64> { Ok(r0(m)? + r1(m)?) };
                if m_hi - m_lo <= SCAN_LIMIT {
                    let mut best = (m_lo, sum(m_lo)?);
                    for m in m_lo + 1..=m_hi {
                        let s = sum(m)?;
                        if s > best.1 {
                            best = (m, s);
                        }
                    }
                    best.0
                } else {
                    golden_max(m_lo, m_hi, sum)?
                }
            }
        };
        let mut w0 = m as f64 * bc0;
        let w1v = w1(m);
        // a capped partner leaves bandwidth on the table; the first user may take it up to its own cap
        let spare = ((self.w_total - w0 - w1v) / bc0).floor() as u64;
        if spare > 0 {
            w0 = (m + spare).min(cap0) as f64 * bc0;
        }
        self.evaluate(p, [w0, w1v], grid_edge)
    }

    fn search(&self, start: &PairPoint) -> Result<PairPoint> {
        let mut best: Option<PairPoint> = None;
        let consider = |c: Option<PairPoint>, best: &mut Option<PairPoint>| {
            if let Some(c) = c {
                if best.is_none_or(|b| better(c.score(self.target), b.score(self.target))) {
                    *best = Some(c);
                }
            }
        };
        consider(self.capped(start, 0)?, &mut best);
        consider(self.capped(start, 1)?, &mut best);

        let p_ref = start.p[0];
        let top_db = 10.0 * (self.p_total / p_ref).log10();
        let power = |db: f64| {
            let p0 = p_ref * db_to_linear(db);
            [p0, self.p_total - p0]
        };
        let usable = |db: f64| db >= POWER_FLOOR_DB - 1e-9 && power(db)[1] > 0.0;

        let mut grid_best: Option<(f64, PairPoint)> = None;
        let coarse = (0..)
            .map(|i| POWER_FLOOR_DB + i as f64 * COARSE_STEP_DB)
            .take_while(|&db| db < top_db);
        for db in coarse.filter(|&db| usable(db)) {
            if let Some(c) = self.at_power(power(db), db <= POWER_FLOOR_DB + 1e-9)? {
                if grid_best
                    .as_ref()
                    .is_none_or(|(_, b)| better(c.score(self.target), b.score(self.target)))
                {
                    grid_best = Some((db, c));
                }
            }
        }
        if let Some((center, _)) = grid_best {
            let steps = (COARSE_STEP_DB / FINE_STEP_DB).round() as i64;
            for k in -steps..=steps {
                let db = center + k as f64 * FINE_STEP_DB;
                if k == 0 || !usable(db) || db >= top_db {
                    continue;
                }
                let c = self.at_power(power(db), db <= POWER_FLOOR_DB + 1e-9)?;
                if let Some(c) = c {
                    if better(c.score(self.target), grid_best.as_ref().unwrap().1.score(self.target)) {
                        grid_best = Some((db, c));
                    }
                }
            }
        }
        if let Some((_, c)) = grid_best {
            consider(Some(c), &mut best);
        }
        // the start point meets every floor by construction
        Ok(best.unwrap_or(*start))
    }
}

fn golden_max(lo: u64, hi: u64, f: impl Fn(u64) -> Result<f64>) -> Result<u64> {
    let (mut a, mut b) = (lo, hi);
    while b - a > 3 {
        let third = (b - a) / 3;
        let (c, d) = (a + third, b - third);
        if f(c)? < f(d)? {
            a = c;
        } else {
            b = d;
        }
    }
    let mut best = (a, f(a)?);
    for m in a + 1..=b {
        let v = f(m)?;
        if v > best.1 {
            best = (m, v);
        }
    }
    Ok(best.0)
}

fn order_by_strength(users: &[UserLink]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..users.len()).collect();
    idx.sort_by(|&a, &b| {
        let pa = users[a].power_density(users[a].baseline_power_w);
        let pb = users[b].power_density(users[b].baseline_power_w);
        pa.total_cmp(&pb).then(a.cmp(&b))
    });
    idx
}

fn objective_value(objective: Objective, rates: &[f64], weakest: usize, strongest: usize) -> f64 {
    match objective {
        Objective::MaxWeakRate => rates[weakest],
        Objective::MaxStrongRate => rates[strongest],
        Objective::SumRate => rates.iter().sum(),
    }
}

/// Two-user allocation. The weaker user is the one with the lower `Pt g / N0`.
pub fn allocate_pair(u1: &UserLink, u2: &UserLink, objective: Objective) -> Result<Allocation> {
    allocate_group(&[u1.clone(), u2.clone()], objective)
}

/// Allocation over `k >= 2` users by greedy pairwise improvement.
///
/// Each round offers every pair the pooled resources it currently holds and
/// keeps the pair search result when it raises the group objective by more
/// than [`GROUP_IMPROVEMENT_TOL`] relative. For two users this is a single
/// pair search.
pub fn allocate_group(users: &[UserLink], objective: Objective) -> Result<Allocation> {
    if users.len() < 2 {
        return Err(Error::domain("allocation needs at least two users"));
    }
    let links = users.iter().map(Link::new).collect::<Result<Vec<_>>>()?;
    let order = order_by_strength(users);
    let (weakest, strongest) = (order[0], order[order.len() - 1]);

    let mut p: Vec<f64> = users.iter().map(|u| u.baseline_power_w).collect();
    let mut w: Vec<f64> = users.iter().map(|u| u.baseline_bandwidth_hz).collect();
    let mut n = vec![0u64; users.len()];
    let mut r = vec![0.0; users.len()];
    for (i, l) in links.iter().enumerate() {
        (n[i], r[i]) = l.rate(p[i], w[i])?;
    }
    let floors = r.clone();
    let w_budget: f64 = w.iter().sum();
    let mut warnings = Vec::new();

    let group_score = |r: &[f64]| (objective_value(objective, r, weakest, strongest), r.iter().sum::<f64>());

    for _ in 0..MAX_GROUP_ROUNDS {
        let mut improved = false;
        for a in 0..order.len() {
            for b in a + 1..order.len() {
                let (i, j) = (order[a], order[b]);
                // bandwidth released by earlier steps stays available to every later pair
                let spare = (w_budget - w.iter().sum::<f64>()).max(0.0);
                let target = match objective {
                    Objective::MaxWeakRate if i == weakest => PairTarget::First,
                    Objective::MaxStrongRate if j == strongest => PairTarget::Second,
                    _ => PairTarget::Sum,
                };
                let pair = Pair {
                    links: [&links[i], &links[j]],
                    floors: [floors[i], floors[j]],
                    p_total: p[i] + p[j],
                    w_total: w[i] + w[j] + spare,
                    target,
                };
                let start = PairPoint {
                    p: [p[i], p[j]],
                    w: [w[i], w[j]],
                    n: [n[i], n[j]],
                    r: [r[i], r[j]],
                    grid_edge: false,
                };
                let next = pair.search(&start)?;
                let mut trial = r.clone();
                trial[i] = next.r[0];
                trial[j] = next.r[1];
                let (old, new) = (group_score(&r), group_score(&trial));
                let gain = new.0 > old.0 * (1.0 + GROUP_IMPROVEMENT_TOL)
                    || (new.0 >= old.0 && new.1 > old.1 * (1.0 + GROUP_IMPROVEMENT_TOL));
                // two users: always take the pair result, it is never worse than the start
                if gain || (users.len() == 2 && !better(old, new)) {
                    p[i] = next.p[0];
                    p[j] = next.p[1];
                    w[i] = next.w[0];
                    w[j] = next.w[1];
                    n[i] = next.n[0];
                    n[j] = next.n[1];
                    r = trial;
                    if next.grid_edge && !warnings.contains(&AllocationWarning::PowerGridEdge) {
                        warnings.push(AllocationWarning::PowerGridEdge);
                    }
                    improved |= gain;
                }
            }
        }
        if !improved || users.len() == 2 {
            break;
        }
    }

    let out_users = (0..users.len())
        .map(|i| UserAllocation {
            power_w: p[i],
            bandwidth_hz: w[i],
            pilots: n[i],
            rate_bps: r[i],
            baseline_rate_bps: floors[i],
        })
        .collect();
    Ok(Allocation {
        objective,
        users: out_users,
        objective_value: objective_value(objective, &r, weakest, strongest),
        sum_rate_bps: r.iter().sum(),
        warnings,
    })
}

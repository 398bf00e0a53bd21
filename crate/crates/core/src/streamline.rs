//! Gradient streamlines `γ' = Du(γ)` of a solved potential.
//!
//! A trajectory starts at a point of the ring and climbs the potential until
//! it enters a collar around the inner set. Along it `u∘γ` is convex and the
//! speed `|Du∘γ|` is nondecreasing; [`streamline_properties`] checks both,
//! together with the Hölder bound `|γ(t) - γ(s)| <= (t - s)^{1/2}`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Location, Vec2};
use crate::grid::{fmt17, gradient, ScalarField, VectorField};
use crate::report::CheckReport;
use crate::{Error, Result};

/// Step halvings attempted before a step is declared impossible.
const MAX_HALVINGS: usize = 20;
/// Speeds below this count as a critical point.
const MIN_SPEED: f64 = 1e-12;
/// Pairs examined by the Hölder check before subsampling.
const MAX_PAIRS: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    ReachedInner,
    LeftDomain,
    Stalled,
    MaxSteps,
}

impl TerminalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalStatus::ReachedInner => "reached_inner",
            TerminalStatus::LeftDomain => "left_domain",
            TerminalStatus::Stalled => "stalled",
            TerminalStatus::MaxSteps => "max_steps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    /// Time step; `None` uses `h / (2 max|Du|)` over the unmasked nodes.
    pub dt: Option<f64>,
    pub max_steps: usize,
    /// Distance to the inner set at which tracing stops; `None` uses `2h`.
    pub stop_collar: Option<f64>,
    /// Integrate `-Du` instead of `Du`.
    pub reverse: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            dt: None,
            max_steps: 1_000_000,
            stop_collar: None,
            reverse: false,
        }
    }
}

impl TraceConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn reversed(mut self) -> Self {
        self.reverse = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(c) = self.stop_collar {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("stop_collar must be nonnegative, got {c}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// A traced trajectory. `points[i] = (t_i, γ(t_i))` with `t_0 = 0`;
/// `values` and `speeds` hold `u` and `|Du|` at the same steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Streamline {
    pub points: Vec<(f64, Vec2)>,
    pub values: Vec<f64>,
    pub speeds: Vec<f64>,
    pub status: TerminalStatus,
    /// Distance from the last point to the inner set.
    pub end_distance: f64,
    /// Length of the leading run of points inside the unmasked region; the
    /// rest lie in the collar around the inner set.
    pub unmasked_len: usize,
    /// Grid spacing of the traced field.
    pub h: f64,
}

impl Streamline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> Vec2 {
        self.points[0].1
    }

    pub fn end(&self) -> Vec2 {
        self.points[self.points.len() - 1].1
    }

    pub fn terminal_time(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Rows `t,x,y,u,speed`, one per accepted step.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,y,u,speed")?;
        for (((t, x), u), s) in self.points.iter().zip(&self.values).zip(&self.speeds) {
            writeln!(w, "{},{},{},{},{}", fmt17(*t), fmt17(x.x), fmt17(x.y), fmt17(*u), fmt17(*s))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("write to memory");
        String::from_utf8(out).expect("ascii csv")
    }
}

/// A field prepared for tracing: its gradient and the default step.
pub struct Tracer<'a> {
    field: &'a ScalarField,
    grad: VectorField,
    max_speed: f64,
}

impl<'a> Tracer<'a> {
    pub fn new(field: &'a ScalarField) -> Self {
        let grad = gradient(field);
        let mask = field.grid().default_mask();
        let max_speed = mask
            .nodes()
            .filter_map(|k| grad.get(k))
            .map(|g| g.norm())
            .fold(0.0, f64::max);
        Self { field, grad, max_speed }
    }

    /// `max|Du|` over the unmasked nodes.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    pub fn default_dt(&self) -> f64 {
        self.field.grid().h() / (2.0 * self.max_speed.max(MIN_SPEED))
    }

    fn velocity(&self, x: Vec2, sign: f64) -> Option<Vec2> {
        self.grad.interpolate(x).ok().map(|g| g * sign)
    }

    fn rk4(&self, x: Vec2, dt: f64, sign: f64) -> Option<Vec2> {
        let k1 = self.velocity(x, sign)?;
        let k2 = self.velocity(x + k1 * (0.5 * dt), sign)?;
        let k3 = self.velocity(x + k2 * (0.5 * dt), sign)?;
        let k4 = self.velocity(x + k3 * dt, sign)?;
        Some(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
    }

    /// Classical RK4 on the bilinear gradient from `x`. A step whose stages
    /// leave the defined region is retried with half the step, up to 20 times.
    pub fn trace(&self, x: Vec2, config: &TraceConfig) -> Result<Streamline> {
        config.validate()?;
        let grid = self.field.grid();
        let ring = grid.ring();
        let h = grid.h();
        if ring.contains(x) != Location::InRing {
            return Err(Error::Precondition(format!("start ({}, {}) is not inside the ring", x.x, x.y)));
        }
        let (Ok(u0), Ok(g0)) = (self.field.interpolate(x), self.grad.interpolate(x)) else {
            return Err(Error::Precondition(format!(
                "start ({}, {}) is not inside the region where the field and its gradient are defined",
                x.x, x.y
            )));
        };
        let collar = config.stop_collar.unwrap_or(2.0 * h);
        let dt = config.dt.unwrap_or_else(|| self.default_dt());
        let sign = if config.reverse { -1.0 } else { 1.0 };
        let mask = grid.default_mask();
        let mut s = Streamline {
            points: vec![(0.0, x)],
            values: vec![u0],
            speeds: vec![g0.norm()],
            status: TerminalStatus::MaxSteps,
            end_distance: ring.dist_to_inner(x),
            unmasked_len: usize::from(mask.contains_point(ring, x)),
            h,
        };
        if s.end_distance <= collar {
            s.status = TerminalStatus::ReachedInner;
            return Ok(s);
        }
        let (mut t, mut p) = (0.0, x);
        for _ in 0..config.max_steps {
            if s.speeds[s.speeds.len() - 1] < MIN_SPEED {
                s.status = TerminalStatus::Stalled;
                return Ok(s);
            }
            let mut step = dt;
            let mut next = None;
            for _ in 0..=MAX_HALVINGS {
                if let Some(q) = self.rk4(p, step, sign) {
                    if let (Ok(u), Ok(g)) = (self.field.interpolate(q), self.grad.interpolate(q)) {
                        next = Some((q, u, g.norm()));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((q, u, speed)) = next else {
                let near_outer = ring.dist_to_outer(p).map_or(true, |d| d <= 2.0 * h);
                s.status = if near_outer {
                    TerminalStatus::LeftDomain
                } else {
                    TerminalStatus::Stalled
                };
                return Ok(s);
            };
            if ring.contains(q) == Location::OutsideOuter {
                s.status = TerminalStatus::LeftDomain;
                return Ok(s);
            }
            t += step;
            p = q;
            s.points.push((t, q));
            s.values.push(u);
            s.speeds.push(speed);
            s.end_distance = ring.dist_to_inner(q);
            if s.unmasked_len + 1 == s.points.len() && mask.contains_point(ring, q) {
                s.unmasked_len += 1;
            }
            if s.end_distance <= collar {
                s.status = TerminalStatus::ReachedInner;
                return Ok(s);
            }
        }
        Ok(s)
    }
}

/// One streamline; see [`Tracer::trace`].
pub fn trace(field: &ScalarField, x: Vec2, config: &TraceConfig) -> Result<Streamline> {
    Tracer::new(field).trace(x, config)
}

/// Convexity of `u∘γ`, monotone speed and the Hölder bound, each with slack
/// `4h` and each required at ≥ 99% of its samples. Only the leading unmasked
/// run `points[..unmasked_len]` is examined.
///
/// * `convexity`: generalized second differences `2(chord - u)` over
///   consecutive triples are `>= -4h` (for uniform steps these are the plain
///   second differences),
/// * `speed`: every speed is at least the largest earlier speed minus `4h`,
/// * `holder`: `|γ(t) - γ(s)| <= (t - s)^{1/2} + 4h` for recorded pairs with
///   `t - s <= 1`.
pub fn streamline_properties(s: &Streamline) -> CheckReport {
    let slack = 4.0 * s.h;
    let n = s.unmasked_len;
    if n < 3 {
        return CheckReport::new("streamline_properties").with_note("fewer than three unmasked points");
    }
    let convex: Vec<f64> = (1..n - 1)
        .map(|i| {
            let (t0, t1, t2) = (s.points[i - 1].0, s.points[i].0, s.points[i + 1].0);
            let w = (t1 - t0) / (t2 - t0);
            let chord = s.values[i - 1] + w * (s.values[i + 1] - s.values[i - 1]);
            2.0 * (chord - s.values[i]) + slack
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let speed: Vec<f64> = s.speeds[..n]
        .iter()
        .map(|&v| {
            let m = v - best + slack;
            best = best.max(v);
            m
        })
        .skip(1)
        .collect();
    let stride = ((n * n / 2) / MAX_PAIRS).max(1);
    let mut holder = Vec::new();
    for i in (0..n).step_by(stride) {
        for j in i + 1..n {
            let (ti, xi) = s.points[i];
            let (tj, xj) = s.points[j];
            if tj - ti > 1.0 {
                break;
            }
            holder.push((tj - ti).sqrt() + slack - xi.dist(xj));
        }
    }
    let mut r = CheckReport::all_of(
        "streamline_properties",
        vec![
            CheckReport::from_margins("convexity", &convex, 0.99),
            CheckReport::from_margins("speed", &speed, 0.99),
            CheckReport::from_margins("holder", &holder, 0.99),
        ],
    );
    r.stat("slack", slack);
    r
}

/// `[½ diam(Ω₀) / u(x)]²`, the bound on the time a streamline from `x` needs
/// to reach the inner set.
pub fn terminal_time_bound(diam: f64, u_start: f64) -> f64 {
    (0.5 * diam / u_start).powi(2)
}

/// Traces `starts` seeded random starts in the unmasked region and checks
///
/// * `reached_inner`: ≥ 96% of the streamlines reach the inner collar,
/// * `properties`: [`streamline_properties`] passes on ≥ 96% of them,
/// * `increasing`: `u` strictly increases at every step (slack `1e-12`),
/// * `terminal_time`: every reached streamline has `T <= 1.5 [½ diam / u(x)]²`.
pub fn streamline_suite(field: &ScalarField, starts: usize, seed: u64, config: &TraceConfig) -> Result<CheckReport> {
    let grid = field.grid();
    let ring = grid.ring();
    let mask = grid.default_mask();
    let tracer = Tracer::new(field);
    let (lo, hi) = ring.outer().bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reached = Vec::new();
    let mut props = Vec::new();
    let mut increasing = Vec::new();
    let mut times = Vec::new();
    let mut attempts = 0usize;
    while reached.len() < starts {
        attempts += 1;
        if attempts > 1000 * starts.max(1) {
            return Err(Error::Precondition("no unmasked start points found".into()));
        }
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if !mask.contains_point(ring, x) {
            continue;
        }
        let s = tracer.trace(x, config)?;
        let ok = s.status == TerminalStatus::ReachedInner;
        reached.push(if ok { 1.0 } else { -1.0 });
        props.push(if streamline_properties(&s).pass { 1.0 } else { -1.0 });
        increasing.extend(s.values.windows(2).map(|w| w[1] - w[0] + 1e-12));
        if ok {
            times.push(1.5 * terminal_time_bound(ring.diam(), s.values[0]) - s.terminal_time());
        }
    }
    let mut r = CheckReport::all_of(
        "streamlines",
        vec![
            CheckReport::from_margins("reached_inner", &reached, 0.96),
            CheckReport::from_margins("properties", &props, 0.96),
            CheckReport::from_margins("increasing", &increasing, 1.0),
            CheckReport::from_margins("terminal_time", &times, 1.0),
        ],
    )
    .with_seed(seed);
    r.stat("starts", starts as f64);
    Ok(r)
}

//! Tangent-envelope adaptive rejection sampling for the conditional
//! posterior of `p`, the one Gibbs conditional without a standard form.
//!
//! The target density is proportional to
//! `p^(x.1) * (1 - p)^(N - x0) * (1 - phi*p)^(x10)` on
//! `(0, min(1, 1/phi))`. Its log is strictly concave there, so tangent
//! lines at a set of abscissae form an upper hull and chords form a
//! lower squeeze. Proposals come from the piecewise-exponential hull;
//! each rejected proposal is added as a new abscissa, tightening the
//! hull for subsequent draws.

use super::SUPPORT_SHRINK;
use crate::error::{DrsError, Result};
use crate::model::DrsTable;
use crate::rng::RandomSource;
use rand::Rng;

/// Number of initial abscissae.
const INIT_POINTS: usize = 5;
/// Abscissae beyond this count stop refining the hull.
const MAX_POINTS: usize = 64;
/// Relative slack for the hull-dominance checks.
const HULL_TOL: f64 = 1e-7;

/// Log-density and derivative of the `p` conditional.
#[derive(Debug, Clone, Copy)]
struct PConditional {
    xdot1: f64,
    tail: f64, // N - x0
    x10: f64,
    phi: f64,
}

impl PConditional {
    fn log_density(&self, p: f64) -> f64 {
        let mut h = 0.0;
        if self.xdot1 > 0.0 {
            h += self.xdot1 * p.ln();
        }
        if self.tail > 0.0 {
            h += self.tail * (-p).ln_1p();
        }
        if self.x10 > 0.0 {
            h += self.x10 * (-self.phi * p).ln_1p();
        }
        h
    }

    fn dlog_density(&self, p: f64) -> f64 {
        let mut d = 0.0;
        if self.xdot1 > 0.0 {
            d += self.xdot1 / p;
        }
        if self.tail > 0.0 {
            d -= self.tail / (1.0 - p);
        }
        if self.x10 > 0.0 {
            d -= self.x10 * self.phi / (1.0 - self.phi * p);
        }
        d
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    x: f64,
    h: f64,
    dh: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    node: usize,
    log_mass: f64,
}

/// Piecewise-linear upper hull over ordered abscissae, with the chord
/// squeeze below. The hull log-density dominates the target at every
/// evaluated point; a violation means the target was not log-concave
/// and is reported as [`DrsError::EnvelopeFailure`].
#[derive(Debug, Clone)]
pub struct ArsEnvelope {
    nodes: Vec<Node>,
    lo: f64,
    hi: f64,
    segments: Vec<Segment>,
    log_total: f64,
}

impl ArsEnvelope {
    fn build(nodes: Vec<Node>, lo: f64, hi: f64) -> Result<Self> {
        let mut env = Self {
            nodes,
            lo,
            hi,
            segments: Vec::new(),
            log_total: f64::NEG_INFINITY,
        };
        env.rebuild()?;
        Ok(env)
    }

    /// Ordered abscissae currently defining the hull.
    pub fn abscissae(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.x).collect()
    }

    fn tangent(&self, node: usize, x: f64) -> f64 {
        let n = &self.nodes[node];
        n.h + n.dh * (x - n.x)
    }

    /// Upper-hull value at `x`.
    fn upper(&self, x: f64) -> f64 {
        for seg in &self.segments {
            if x <= seg.b {
                return self.tangent(seg.node, x);
            }
        }
        let last = self.segments.last().expect("nonempty hull");
        self.tangent(last.node, x)
    }

    /// Chord squeeze at `x`; minus infinity outside the abscissa range.
    fn lower(&self, x: f64) -> f64 {
        let nodes = &self.nodes;
        if x < nodes[0].x || x > nodes[nodes.len() - 1].x {
            return f64::NEG_INFINITY;
        }
        for w in nodes.windows(2) {
            if x <= w[1].x {
                let t = (x - w[0].x) / (w[1].x - w[0].x);
                return w[0].h + t * (w[1].h - w[0].h);
            }
        }
        f64::NEG_INFINITY
    }

    /// Recomputes tangent intersections and segment masses.
    fn rebuild(&mut self) -> Result<()> {
        let nodes = &self.nodes;
        let mut cuts = Vec::with_capacity(nodes.len() + 1);
        cuts.push(self.lo);
        for i in 0..nodes.len() - 1 {
            let (l, r) = (&nodes[i], &nodes[i + 1]);
            let gap = r.dh - l.dh;
            // Strict concavity means dh decreases; treat a near-flat
            // stretch as meeting midway.
            let z = if gap > -1e-12 * (l.dh.abs() + r.dh.abs() + 1.0) {
                0.5 * (l.x + r.x)
            } else {
                (r.h - l.h - r.x * r.dh + l.x * l.dh) / (l.dh - r.dh)
            };
            let slack = 1e-9 + 1e-6 * (r.x - l.x);
            if z < l.x - slack || z > r.x + slack {
                return Err(DrsError::EnvelopeFailure(format!(
                    "tangent intersection {z} escapes [{}, {}]",
                    l.x, r.x
                )));
            }
            cuts.push(z.clamp(l.x, r.x));
        }
        cuts.push(self.hi);

        self.segments.clear();
        let mut log_masses = Vec::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            let (a, b) = (cuts[i], cuts[i + 1]);
            let log_mass = if b > a {
                segment_log_mass(node, a, b)
            } else {
                f64::NEG_INFINITY
            };
            log_masses.push(log_mass);
            self.segments.push(Segment {
                a,
                b,
                node: i,
                log_mass,
            });
        }
        self.log_total = log_sum_exp(&log_masses);
        if !self.log_total.is_finite() {
            return Err(DrsError::EnvelopeFailure(
                "hull mass is not finite".into(),
            ));
        }
        Ok(())
    }

    /// One draw from the normalized piecewise-exponential hull.
    fn sample(&self, rng: &mut RandomSource) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            acc += (seg.log_mass - self.log_total).exp();
            if u <= acc {
                chosen = i;
                break;
            }
        }
        let seg = &self.segments[chosen];
        let d = self.nodes[seg.node].dh;
        let v: f64 = rng.random();
        let x = invert_exponential_segment(seg.a, seg.b, d, v);
        x.clamp(self.lo.max(SUPPORT_SHRINK), self.hi)
    }

    /// Adds an evaluated point, verifying hull dominance on both sides.
    fn insert(&mut self, x: f64, h: f64, dh: f64) -> Result<()> {
        let scale = 1.0 + h.abs();
        if h > self.upper(x) + HULL_TOL * scale {
            return Err(DrsError::EnvelopeFailure(format!(
                "target exceeds upper hull at {x}: {h} > {}",
                self.upper(x)
            )));
        }
        let lw = self.lower(x);
        if lw.is_finite() && h < lw - HULL_TOL * scale {
            return Err(DrsError::EnvelopeFailure(format!(
                "target undercuts chord squeeze at {x}: {h} < {lw}"
            )));
        }
        if self.nodes.len() >= MAX_POINTS {
            return Ok(());
        }
        let pos = self.nodes.partition_point(|n| n.x < x);
        // Skip points that collide with an existing abscissa.
        let too_close = |n: &Node| (n.x - x).abs() < 1e-12;
        if (pos > 0 && too_close(&self.nodes[pos - 1]))
            || (pos < self.nodes.len() && too_close(&self.nodes[pos]))
        {
            return Ok(());
        }
        self.nodes.insert(pos, Node { x, h, dh });
        self.rebuild()
    }
}

/// Log of the integral of `exp(h + dh (x - node.x))` over `[a, b]`.
fn segment_log_mass(node: &Node, a: f64, b: f64) -> f64 {
    let d = node.dh;
    let ha = node.h + d * (a - node.x);
    let hb = node.h + d * (b - node.x);
    let t = d * (b - a);
    if t.abs() < 1e-12 {
        ha + (b - a).ln()
    } else if d > 0.0 {
        hb + (-(ha - hb).exp_m1()).ln() - d.ln()
    } else {
        ha + (-(hb - ha).exp_m1()).ln() - (-d).ln()
    }
}

/// Inverse-CDF draw from a density proportional to `exp(d * x)` on `[a, b]`.
fn invert_exponential_segment(a: f64, b: f64, d: f64, u: f64) -> f64 {
    let t = d * (b - a);
    if t.abs() < 1e-12 {
        return a + u * (b - a);
    }
    if t > 0.0 {
        if u == 0.0 {
            return a;
        }
        // Mass piles up at b; anchor the inversion there.
        b + ((u + (1.0 - u) * (-t).exp()).ln()) / d
    } else {
        a + (u * t.exp_m1()).ln_1p() / d
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Adaptive rejection sampler for the `p` conditional at one `(N, phi)`
/// state. Tracks proposal and acceptance counts so callers can record
/// envelope efficiency.
#[derive(Debug, Clone)]
pub struct ArsSampler {
    target: PConditional,
    envelope: ArsEnvelope,
    pub proposals: u64,
    pub accepted: u64,
}

impl ArsSampler {
    /// Builds the sampler for population size `n`, behavioral effect
    /// `phi` and the observed table. The five initial abscissae span
    /// the support with the middle one anchored at `c-hat / phi`.
    pub fn new(n: u64, phi: f64, table: &DrsTable) -> Result<Self> {
        let x0 = table.x0();
        if n < x0 {
            return Err(DrsError::Domain(format!(
                "population size {n} smaller than the {x0} observed individuals"
            )));
        }
        if !(phi > 0.0) {
            return Err(DrsError::Domain(format!("phi = {phi} must be positive")));
        }
        let target = PConditional {
            xdot1: table.xdot1() as f64,
            tail: (n - x0) as f64,
            x10: table.x10() as f64,
            phi,
        };
        let hi = (1.0f64).min(1.0 / phi) - SUPPORT_SHRINK;
        let width = hi;

        let anchor = (table.c_hat() / phi).clamp(0.02 * width, 0.98 * width);
        let mut xs: Vec<f64> = [0.05, 0.275, 0.725, 0.95]
            .iter()
            .map(|f| f * width)
            .chain([anchor])
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * width);
        debug_assert!(xs.len() >= INIT_POINTS - 1);

        let nodes = xs
            .into_iter()
            .map(|x| Node {
                x,
                h: target.log_density(x),
                dh: target.dlog_density(x),
            })
            .collect();
        let envelope = ArsEnvelope::build(nodes, 0.0, hi)?;
        Ok(Self {
            target,
            envelope,
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn envelope(&self) -> &ArsEnvelope {
        &self.envelope
    }

    /// One exact draw from the normalized target.
    pub fn draw(&mut self, rng: &mut RandomSource) -> Result<f64> {
        loop {
            self.proposals += 1;
            let x = self.envelope.sample(rng);
            let w: f64 = rng.random();
            let log_w = w.ln();
            let ux = self.envelope.upper(x);
            if log_w <= self.envelope.lower(x) - ux {
                self.accepted += 1;
                return Ok(x);
            }
            let hx = self.target.log_density(x);
            if log_w <= hx - ux {
                self.accepted += 1;
                self.envelope.insert(x, hx, self.target.dlog_density(x))?;
                return Ok(x);
            }
            self.envelope.insert(x, hx, self.target.dlog_density(x))?;
        }
    }
}

/// Draws one value of `p` from its conditional posterior given the
/// current population size and behavioral effect.
pub fn sample_p_ars(n: u64, phi: f64, table: &DrsTable, rng: &mut RandomSource) -> Result<f64> {
    ArsSampler::new(n, phi, table)?.draw(rng)
}

//! Probability measures on a section: a tabulated density plus finitely many
//! Dirac atoms, together with their push-forward under the slow relation.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, Side};
use crate::relation::{FlowCase, SlowRelation};

/// Default number of grid nodes for tabulated densities.
pub const DEFAULT_NODES: usize = 2001;

/// Tolerance on total mass.
pub const MASS_TOL: f64 = 1e-8;

/// Piecewise-linear density on a uniform grid over `[lo, hi]`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(hi > lo) || values.len() < 2 {
            return Err(Error::NotNormalizable(format!(
                "need hi > lo and at least two nodes (got [{lo}, {hi}], {} nodes)",
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NotNormalizable(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let h = (hi - lo) / (values.len() - 1) as f64;
        let mut cumulative = Vec::with_capacity(values.len());
        // Compensated summation keeps the running mass accurate to rounding.
        let (mut acc, mut carry) = (0.0f64, 0.0f64);
        cumulative.push(0.0);
        for w in values.windows(2) {
            let term = 0.5 * h * (w[0] + w[1]) - carry;
            let next = acc + term;
            carry = (next - acc) - term;
            acc = next;
            cumulative.push(acc);
        }
        Ok(Self {
            lo,
            hi,
            values,
            cumulative,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        let (lo, hi, last) = (self.lo, self.hi, self.values.len() - 1);
        (0..self.values.len()).map(move |i| if i == last { hi } else { lo + h * i as f64 })
    }

    pub fn mass(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= factor);
        self.cumulative.iter_mut().for_each(|v| *v *= factor);
        self
    }

    fn cell(&self, s: f64) -> (usize, f64) {
        let h = self.step();
        let last = self.values.len() - 2;
        let i = (((s - self.lo) / h).floor().max(0.0) as usize).min(last);
        (i, s - (self.lo + h * i as f64))
    }

    pub fn at(&self, s: f64) -> f64 {
        if s < self.lo || s > self.hi {
            return 0.0;
        }
        let (i, u) = self.cell(s);
        let slope = (self.values[i + 1] - self.values[i]) / self.step();
        (self.values[i] + slope * u).max(0.0)
    }

    /// Mass of the density on `(-inf, s]`.
    pub fn cdf(&self, s: f64) -> f64 {
        if s <= self.lo {
            return 0.0;
        }
        if s >= self.hi {
            return self.mass();
        }
        let (i, u) = self.cell(s);
        let slope = (self.values[i + 1] - self.values[i]) / self.step();
        self.cumulative[i] + self.values[i] * u + 0.5 * slope * u * u
    }

    /// Smallest s with `cdf(s) = target`, for `0 <= target <= mass`.
    fn quantile(&self, target: f64) -> f64 {
        if target <= 0.0 {
            // First point of positive density.
            let i = self.values.iter().position(|&v| v > 0.0).unwrap_or(0);
            return self.nodes().nth(i.saturating_sub(1)).unwrap_or(self.lo);
        }
        let n = self.cumulative.len();
        // First cell whose right cumulative value reaches the target.
        let j = self
            .cumulative
            .partition_point(|&c| c < target)
            .clamp(1, n - 1);
        let i = j - 1;
        let h = self.step();
        let r = (target - self.cumulative[i]).max(0.0);
        let v = self.values[i];
        let slope = (self.values[i + 1] - v) / h;
        let disc = (v * v + 2.0 * slope * r).max(0.0);
        let denom = v + disc.sqrt();
        let u = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (self.lo + h * i as f64 + u.min(h)).min(self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Entry measure families.
#[derive(Debug, Clone, PartialEq)]
pub enum EntryKind {
    Uniform {
        lo: f64,
        hi: f64,
    },
    TruncatedCauchy {
        location: f64,
        scale: f64,
        lo: f64,
        hi: f64,
    },
    /// Nonnegative values on a uniform grid over `[lo, hi]`, normalized.
    Table {
        lo: f64,
        hi: f64,
        values: Vec<f64>,
    },
}

/// Density part plus atoms; total mass one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMeasure {
    density: Option<TabulatedDensity>,
    atoms: Vec<Atom>,
}

impl TransportMeasure {
    /// Builds a measure, checking nonnegativity and unit total mass.
    pub fn new(density: Option<TabulatedDensity>, mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms
            .iter()
            .any(|a| !(a.mass >= 0.0 && a.location.is_finite()))
        {
            return Err(Error::NotNormalizable(
                "atoms need finite locations and nonnegative masses".into(),
            ));
        }
        atoms.retain(|a| a.mass > 0.0);
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let m = Self { density, atoms };
        let total = m.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalizable(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(m)
    }

    fn unchecked(density: Option<TabulatedDensity>, mut atoms: Vec<Atom>) -> Self {
        atoms.retain(|a| a.mass > 0.0);
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        Self { density, atoms }
    }

    pub fn dirac(location: f64) -> Self {
        Self::unchecked(
            None,
            vec![Atom {
                location,
                mass: 1.0,
            }],
        )
    }

    pub fn make_entry(kind: &EntryKind) -> Result<Self> {
        Self::make_entry_with_nodes(kind, DEFAULT_NODES)
    }

    pub fn make_entry_with_nodes(kind: &EntryKind, nodes: usize) -> Result<Self> {
        let density = match kind {
            EntryKind::Uniform { lo, hi } => {
                if !(hi > lo) {
                    return Err(Error::NotNormalizable(format!(
                        "empty interval [{lo}, {hi}]"
                    )));
                }
                normalized(TabulatedDensity::new(*lo, *hi, vec![1.0; nodes.max(2)])?)?
            }
            EntryKind::TruncatedCauchy {
                location,
                scale,
                lo,
                hi,
            } => {
                if !(*scale > 0.0) {
                    return Err(Error::Config(format!(
                        "Cauchy scale must be positive, got {scale}"
                    )));
                }
                let n = nodes.max(2);
                let h = (hi - lo) / (n - 1) as f64;
                let values = (0..n)
                    .map(|i| {
                        let z = (lo + h * i as f64 - location) / scale;
                        1.0 / (1.0 + z * z)
                    })
                    .collect();
                normalized(TabulatedDensity::new(*lo, *hi, values)?)?
            }
            EntryKind::Table { lo, hi, values } => {
                normalized(TabulatedDensity::new(*lo, *hi, values.clone())?)?
            }
        };
        Self::new(Some(density), Vec::new())
    }

    pub fn density(&self) -> Option<&TabulatedDensity> {
        self.density.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density_mass(&self) -> f64 {
        self.density.as_ref().map_or(0.0, TabulatedDensity::mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.density_mass() + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// Smallest interval containing the density support and all atoms.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let Some(d) = &self.density {
            lo = d.lo;
            hi = d.hi;
        }
        for a in &self.atoms {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        (lo, hi)
    }

    pub fn density_at(&self, s: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.at(s))
    }

    /// Right-continuous distribution function.
    pub fn cdf(&self, s: f64) -> f64 {
        let d = self.density.as_ref().map_or(0.0, |d| d.cdf(s));
        let a: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location <= s)
            .map(|a| a.mass)
            .sum();
        (d + a).min(1.0)
    }

    /// Left limit of the distribution function.
    pub fn cdf_left(&self, s: f64) -> f64 {
        let d = self.density.as_ref().map_or(0.0, |d| d.cdf(s));
        let a: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location < s)
            .map(|a| a.mass)
            .sum();
        (d + a).min(1.0)
    }

    /// Generalized inverse `inf { s : cdf(s) >= u }`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut below = 0.0;
        for a in &self.atoms {
            let d_at = self.density.as_ref().map_or(0.0, |d| d.cdf(a.location));
            let left = d_at + below;
            if u <= left {
                break;
            }
            if u <= left + a.mass {
                return a.location;
            }
            below += a.mass;
        }
        match &self.density {
            Some(d) => d.quantile((u - below).clamp(0.0, d.mass())),
            None => self.atoms.last().map_or(f64::NAN, |a| a.location),
        }
    }

    /// Inverse-CDF sample of size `n`; draw `i` uses the ChaCha stream
    /// `(seed, i)` so the values do not depend on evaluation order.
    pub fn sample(&self, n: usize, seed: u64) -> EmpiricalSample {
        let values = (0..n)
            .map(|i| self.quantile(uniform_draw(seed, i as u64)))
            .collect();
        EmpiricalSample {
            values,
            seed,
            count: n,
        }
    }
}

fn normalized(d: TabulatedDensity) -> Result<TabulatedDensity> {
    let mass = d.mass();
    if !(mass > 0.0) {
        return Err(Error::NotNormalizable("density integrates to zero".into()));
    }
    Ok(d.scaled(1.0 / mass))
}

/// The `index`-th uniform draw in `[0, 1)` of the stream keyed by `seed`.
pub fn uniform_draw(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    pub values: Vec<f64>,
    pub seed: u64,
    pub count: usize,
}

impl EmpiricalSample {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            count: values.len(),
            values,
            seed: 0,
        }
    }
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and `target`, using both one-sided limits of the target CDF.
pub fn ks_distance(samples: &[f64], target: &TransportMeasure) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        d = d.max((target.cdf_left(v) - below).abs());
        d = d.max((target.cdf(v) - upto).abs());
        i = j;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]` of the samples; the last bin is
/// closed on the right. All-equal samples give a single bin.
pub fn histogram(samples: &[f64], bins: usize) -> Vec<Bin> {
    if samples.is_empty() {
        return Vec::new();
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) || bins <= 1 {
        return vec![Bin {
            left: lo,
            right: hi,
            count: samples.len(),
        }];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let k = (((s - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| Bin {
            left: lo + width * k as f64,
            right: if k + 1 == bins {
                hi
            } else {
                lo + width * (k + 1) as f64
            },
            count,
        })
        .collect()
}

/// Both algebraic forms of the exit density at `s_plus` for entry height
/// `s_minus = S0^{-1}(s_plus)`, without the entry-density factor:
/// `-I_+'(s+)/I_-'(s-)` and `f'(alpha(s+)) g(omega(s-)) / (f'(omega(s-)) g(alpha(s+)))`.
pub fn jacobian_forms(relation: &SlowRelation, s_minus: f64, s_plus: f64) -> Result<(f64, f64)> {
    let e = relation.evaluator();
    let general = -e.sdi_derivative(s_plus, Side::Repelling)?
        / e.sdi_derivative(s_minus, Side::Attracting)?;
    let sys = e.system();
    let alpha = e.branch_root(s_plus, Side::Repelling)?;
    let omega = e.branch_root(s_minus, Side::Attracting)?;
    let lienard = sys.slope(alpha) * sys.g(omega) / (sys.slope(omega) * sys.g(alpha));
    Ok((general, lienard))
}

/// Exit density at `s_plus` for an entry density `entry`, using the general
/// form; zero outside the image of the entry support.
pub fn exit_density_at(
    entry: &TabulatedDensity,
    relation: &SlowRelation,
    s_plus: f64,
) -> Result<f64> {
    let lo = relation.two_section_relation(entry.lo())?;
    let hi = relation.two_section_relation(entry.hi())?;
    if s_plus < lo || s_plus > hi {
        return Ok(0.0);
    }
    let s_minus = relation
        .relation_inverse(s_plus)?
        .clamp(entry.lo(), entry.hi());
    let (general, _) = jacobian_forms(relation, s_minus, s_plus)?;
    Ok(entry.at(s_minus) * general)
}

/// Tabulates the push-forward of the density part of `entry` restricted to
/// `[lo, hi]` under `S0`, on `nodes` points over `[S0(lo), S0(hi)]`.
/// Returns the density and the largest relative disagreement between the two
/// Jacobian forms seen on the grid.
fn push_density(
    entry: &TabulatedDensity,
    relation: &SlowRelation,
    lo: f64,
    hi: f64,
    nodes: usize,
) -> Result<(TabulatedDensity, f64)> {
    let t_lo = relation.two_section_relation(lo)?;
    let t_hi = relation.two_section_relation(hi)?;
    let n = nodes.max(2);
    let h = (t_hi - t_lo) / (n - 1) as f64;
    let mut values = Vec::with_capacity(n);
    let mut disagreement: f64 = 0.0;
    for i in 0..n {
        let (s_plus, s_minus) = if i == 0 {
            (t_lo, lo)
        } else if i == n - 1 {
            (t_hi, hi)
        } else {
            let s_plus = t_lo + h * i as f64;
            (s_plus, relation.relation_inverse(s_plus)?.clamp(lo, hi))
        };
        let (general, lienard) = jacobian_forms(relation, s_minus, s_plus)?;
        disagreement =
            disagreement.max((general - lienard).abs() / general.abs().max(f64::MIN_POSITIVE));
        let d_en = entry.at(s_minus);
        values.push(d_en * general);
    }
    Ok((TabulatedDensity::new(t_lo, t_hi, values)?, disagreement))
}

/// Result of a push-forward with its internal consistency diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct PushForward {
    pub measure: TransportMeasure,
    /// Largest relative disagreement between the two Jacobian forms.
    pub form_disagreement: f64,
}

/// Push-forward of `entry` under `S0` (tunnel transport on the whole support).
/// Atoms are mapped pointwise.
pub fn pushforward_density(
    entry: &TransportMeasure,
    relation: &SlowRelation,
) -> Result<PushForward> {
    pushforward_density_with_nodes(entry, relation, DEFAULT_NODES)
}

pub fn pushforward_density_with_nodes(
    entry: &TransportMeasure,
    relation: &SlowRelation,
    nodes: usize,
) -> Result<PushForward> {
    let mut disagreement: f64 = 0.0;
    let density = match entry.density() {
        Some(d) => {
            let (pushed, dis) = push_density(d, relation, d.lo(), d.hi(), nodes)?;
            disagreement = dis;
            Some(pushed)
        }
        None => None,
    };
    let atoms = entry
        .atoms()
        .iter()
        .map(|a| {
            Ok(Atom {
                location: relation.two_section_relation(a.location)?,
                mass: a.mass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PushForward {
        measure: TransportMeasure::unchecked(density, atoms),
        form_disagreement: disagreement,
    })
}

/// The limit exit measure: `mu0 S0^{-1}` in the tunnel case, and in the
/// funnel case the tunnel push-forward of the mass below the buffer point plus
/// an atom at `s_c^+` carrying the mass at or above it.
pub fn pushforward_measure(
    entry: &TransportMeasure,
    relation: &SlowRelation,
) -> Result<PushForward> {
    pushforward_measure_with_nodes(entry, relation, DEFAULT_NODES)
}

pub fn pushforward_measure_with_nodes(
    entry: &TransportMeasure,
    relation: &SlowRelation,
    nodes: usize,
) -> Result<PushForward> {
    let (buffer, sc_plus) = match relation.flow_case() {
        Some(FlowCase::Funnel { buffer }) => (buffer, relation.sc_plus().expect("two-section")),
        Some(FlowCase::Tunnel) => return pushforward_density_with_nodes(entry, relation, nodes),
        None => {
            return Err(Error::Config(
                "push-forward needs a two-section relation".into(),
            ))
        }
    };
    let mut funnel_mass = 0.0;
    let mut disagreement: f64 = 0.0;
    let mut atoms = Vec::new();
    let density = match entry.density() {
        Some(d) => {
            funnel_mass += d.mass() - d.cdf(buffer);
            if d.lo() < buffer {
                let top = d.hi().min(buffer);
                let (pushed, dis) = push_density(d, relation, d.lo(), top, nodes)?;
                disagreement = dis;
                Some(pushed)
            } else {
                None
            }
        }
        None => None,
    };
    for a in entry.atoms() {
        if a.location >= buffer {
            funnel_mass += a.mass;
        } else {
            atoms.push(Atom {
                location: relation.two_section_relation(a.location)?,
                mass: a.mass,
            });
        }
    }
    atoms.push(Atom {
        location: sc_plus,
        mass: funnel_mass,
    });
    Ok(PushForward {
        measure: TransportMeasure::unchecked(density, atoms),
        form_disagreement: disagreement,
    })
}

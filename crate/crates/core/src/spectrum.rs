//! Dirichlet-Laplacian spectrum of rectangles and boxes.
//!
//! Side lengths are given through their squares as exact rationals, optionally in
//! units of `π²`. The eigenvalue of the sine mode `(n₁, …, n_d)` is
//! `π² Σ nₐ² / Lₐ²`, so with `Lₐ² = rₐ·U` the quantity `Σ nₐ² / rₐ` is an exact
//! rational and grouping by multiplicity never touches floating point.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact rational used for side squares and eigenvalues.
pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("dimension must be 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("side square {0} is not strictly positive")]
    NonPositiveSide(String),
    #[error("cannot parse side square {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("side squares mix plain and pi^2 units; use one unit for all sides")]
    MixedUnits,
    #[error("the last eigenvalue group may be truncated by the enumeration cutoff")]
    IncompletePrefix,
    #[error("point {0:?} lies outside the closed box")]
    OutOfDomain(Vec<f64>),
    #[error("mode has {got} indices but the domain has dimension {expected}")]
    IndexArity { expected: usize, got: usize },
    #[error("no eigenvalue group matches {0}")]
    NoSuchGroup(String),
}

/// Unit in which the side squares are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    Plain,
    PiSquared,
}

impl LengthUnit {
    fn factor(self) -> f64 {
        match self {
            LengthUnit::Plain => 1.0,
            LengthUnit::PiSquared => PI * PI,
        }
    }
}

/// One side square `r·U` as parsed from text such as `"9/4"`, `"2.25"`, `"pi^2"` or `"3*pi^2"`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideSquare {
    pub value: Rational,
    pub unit: LengthUnit,
}

impl FromStr for SideSquare {
    type Err = SpectrumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| SpectrumError::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let lower = compact.to_ascii_lowercase();
        let (coef, unit) = if let Some(stripped) = lower.strip_suffix("pi^2") {
            let c = stripped.strip_suffix('*').unwrap_or(stripped);
            (c.to_string(), LengthUnit::PiSquared)
        } else {
            (lower.clone(), LengthUnit::Plain)
        };
        if coef.contains("pi") {
            return Err(err("only pi^2 may appear, as a trailing factor"));
        }
        let value = if coef.is_empty() && unit == LengthUnit::PiSquared {
            Rational::one()
        } else {
            parse_rational(&coef).map_err(|r| err(&r))?
        };
        if !value.is_positive() {
            return Err(SpectrumError::NonPositiveSide(s.to_string()));
        }
        Ok(SideSquare { value, unit })
    }
}

/// Parses `"a/b"`, `"12"`, `"2.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    if s.is_empty() {
        return Err("empty number".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(n / d);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err("no digits".into());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(format!("invalid decimal {s:?}"));
    }
    if frac_part.len() > 30 {
        return Err("too many decimal places".into());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: i128 = digits.parse().map_err(|e| format!("{e}"))?;
    let den = 10i128.pow(frac_part.len() as u32);
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Box `(0,L₁)×…×(0,L_d)` described by exact side squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    side_sq: Vec<(i128, i128)>,
    unit: LengthUnit,
}

impl DomainSpec {
    pub fn new(side_sq: Vec<Rational>, unit: LengthUnit) -> Result<Self, SpectrumError> {
        if !(2..=3).contains(&side_sq.len()) {
            return Err(SpectrumError::BadDimension(side_sq.len()));
        }
        if let Some(bad) = side_sq.iter().find(|r| !r.is_positive()) {
            return Err(SpectrumError::NonPositiveSide(bad.to_string()));
        }
        Ok(Self {
            side_sq: side_sq.iter().map(|r| (*r.numer(), *r.denom())).collect(),
            unit,
        })
    }

    pub fn from_sides(sides: &[SideSquare]) -> Result<Self, SpectrumError> {
        let unit = sides.first().map(|s| s.unit).unwrap_or(LengthUnit::Plain);
        if sides.iter().any(|s| s.unit != unit) {
            return Err(SpectrumError::MixedUnits);
        }
        Self::new(sides.iter().map(|s| s.value).collect(), unit)
    }

    pub fn parse(sides: &[&str]) -> Result<Self, SpectrumError> {
        let parsed = sides
            .iter()
            .map(|s| s.parse::<SideSquare>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_sides(&parsed)
    }

    /// `(0,π)²`.
    pub fn square_pi() -> Self {
        Self::new(vec![Rational::one(); 2], LengthUnit::PiSquared).expect("valid")
    }

    /// `(0,π)³`.
    pub fn cube_pi() -> Self {
        Self::new(vec![Rational::one(); 3], LengthUnit::PiSquared).expect("valid")
    }

    pub fn dimension(&self) -> usize {
        self.side_sq.len()
    }

    pub fn unit(&self) -> LengthUnit {
        self.unit
    }

    pub fn side_sq(&self) -> Vec<Rational> {
        self.side_sq.iter().map(|&(n, d)| Rational::new(n, d)).collect()
    }

    /// Side lengths `Lₐ` as floats.
    pub fn lengths(&self) -> Vec<f64> {
        self.side_sq()
            .iter()
            .map(|r| (to_f64(r) * self.unit.factor()).sqrt())
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Converts an exact eigenvalue rational into the actual eigenvalue `λ`.
    pub fn lambda_of(&self, exact: &Rational) -> f64 {
        to_f64(exact) * PI * PI / self.unit.factor()
    }

    fn mode_value(&self, indices: &[u32]) -> Rational {
        indices
            .iter()
            .zip(self.side_sq())
            .map(|(&n, r)| Rational::from_integer((n as i128) * (n as i128)) / r)
            .fold(Rational::zero(), |acc, x| acc + x)
    }

    pub fn mode(&self, indices: &[u32]) -> Result<EigenMode, SpectrumError> {
        if indices.len() != self.dimension() {
            return Err(SpectrumError::IndexArity {
                expected: self.dimension(),
                got: indices.len(),
            });
        }
        assert!(indices.iter().all(|&n| n >= 1), "mode indices start at 1");
        Ok(EigenMode {
            indices: indices.to_vec(),
            eigenvalue_exact: self.mode_value(indices),
        })
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.unit {
            LengthUnit::Plain => "",
            LengthUnit::PiSquared => "*pi^2",
        };
        let parts: Vec<String> = self.side_sq().iter().map(|r| format!("{r}{suffix}")).collect();
        write!(f, "box(side_sq = [{}])", parts.join(", "))
    }
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// A sine mode `Π sin(nₐπxₐ/Lₐ)` with its exact eigenvalue rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EigenMode {
    pub indices: Vec<u32>,
    /// `Σ nₐ²/rₐ`; the eigenvalue is this times `π²/U`.
    pub eigenvalue_exact: Rational,
}

impl EigenMode {
    fn spectral_cmp(&self, other: &Self) -> Ordering {
        self.eigenvalue_exact
            .cmp(&other.eigenvalue_exact)
            .then_with(|| self.indices.cmp(&other.indices))
    }
}

/// A Dirichlet eigenvalue together with its full mode set.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup {
    pub eigenvalue_exact: Rational,
    pub lambda: f64,
    /// Sorted lexicographically by indices.
    pub modes: Vec<EigenMode>,
    pub multiplicity: usize,
    /// 1-based position in the spectrum counted with multiplicity.
    pub index_j: usize,
}

/// All modes with exact eigenvalue `≤ bound`, in spectral order.
fn modes_up_to(domain: &DomainSpec, bound: &Rational) -> Vec<EigenMode> {
    let side_sq = domain.side_sq();
    let d = side_sq.len();
    // minimal contribution of axes a.. when every remaining index is 1
    let mut tail_min = vec![Rational::zero(); d + 1];
    for a in (0..d).rev() {
        tail_min[a] = tail_min[a + 1] + Rational::one() / side_sq[a];
    }
    let mut out = Vec::new();
    let mut idx = vec![0u32; d];
    fn rec(
        axis: usize,
        partial: Rational,
        idx: &mut Vec<u32>,
        side_sq: &[Rational],
        tail_min: &[Rational],
        bound: &Rational,
        out: &mut Vec<EigenMode>,
    ) {
        if axis == side_sq.len() {
            out.push(EigenMode {
                indices: idx.clone(),
                eigenvalue_exact: partial,
            });
            return;
        }
        let mut n: i128 = 1;
        loop {
            let here = partial + Rational::from_integer(n * n) / side_sq[axis];
            if here + tail_min[axis + 1] > *bound {
                break;
            }
            idx[axis] = n as u32;
            rec(axis + 1, here, idx, side_sq, tail_min, bound, out);
            n += 1;
        }
    }
    rec(0, Rational::zero(), &mut idx, &side_sq, &tail_min, bound, &mut out);
    out.sort_by(|a, b| a.spectral_cmp(b));
    out
}

fn initial_bound(domain: &DomainSpec) -> Rational {
    domain
        .side_sq()
        .iter()
        .map(|r| Rational::one() / r)
        .fold(Rational::zero(), |a, b| a + b)
        * Rational::from_integer(4)
}

/// The first `count` modes in ascending eigenvalue order, ties broken lexicographically.
///
/// The search doubles an eigenvalue threshold until at least `count` modes lie
/// below it; every mode under the threshold is enumerated, so the prefix is complete.
pub fn enumerate_modes(domain: &DomainSpec, count: usize) -> Vec<EigenMode> {
    assert!(count >= 1, "count must be positive");
    let mut bound = initial_bound(domain);
    loop {
        let mut modes = modes_up_to(domain, &bound);
        if modes.len() >= count {
            modes.truncate(count);
            return modes;
        }
        bound *= Rational::from_integer(2);
    }
}

fn group_sorted(domain_modes: &[EigenMode], lambda_of: impl Fn(&Rational) -> f64) -> Vec<EigenGroup> {
    let mut groups: Vec<EigenGroup> = Vec::new();
    let mut below = 0usize;
    for mode in domain_modes {
        match groups.last_mut() {
            Some(g) if g.eigenvalue_exact == mode.eigenvalue_exact => {
                g.modes.push(mode.clone());
                g.multiplicity += 1;
            }
            _ => {
                if let Some(g) = groups.last() {
                    below += g.multiplicity;
                }
                groups.push(EigenGroup {
                    eigenvalue_exact: mode.eigenvalue_exact,
                    lambda: lambda_of(&mode.eigenvalue_exact),
                    modes: vec![mode.clone()],
                    multiplicity: 1,
                    index_j: below + 1,
                });
            }
        }
    }
    for g in &mut groups {
        g.modes.sort_by(|a, b| a.indices.cmp(&b.indices));
    }
    groups
}

/// Groups a sorted, gap-free spectral prefix by exact eigenvalue equality.
///
/// The input carries no certificate that its final eigenvalue is complete, so the last
/// group is dropped. Fails with [`SpectrumError::IncompletePrefix`] when nothing remains.
pub fn group_spectrum(domain: &DomainSpec, modes: &[EigenMode]) -> Result<Vec<EigenGroup>, SpectrumError> {
    let mut groups = group_sorted(modes, |r| domain.lambda_of(r));
    groups.pop();
    if groups.is_empty() {
        return Err(SpectrumError::IncompletePrefix);
    }
    Ok(groups)
}

/// The first `count` eigenvalue groups, each certified complete.
pub fn spectrum_groups(domain: &DomainSpec, count: usize) -> Vec<EigenGroup> {
    let mut bound = initial_bound(domain);
    loop {
        // every mode with value <= bound is present, so all groups are complete
        let modes = modes_up_to(domain, &bound);
        let mut groups = group_sorted(&modes, |r| domain.lambda_of(r));
        if groups.len() >= count {
            groups.truncate(count);
            return groups;
        }
        bound *= Rational::from_integer(2);
    }
}

/// How a caller names the eigenvalue of interest.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupTarget {
    /// 1-based spectral index; must be the first index of its group.
    Index(usize),
    /// Exact eigenvalue rational (`Σ n²/r`).
    Exact(Rational),
}

impl fmt::Display for GroupTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupTarget::Index(j) => write!(f, "j = {j}"),
            GroupTarget::Exact(r) => write!(f, "eigenvalue {r}"),
        }
    }
}

/// A located group with its neighbouring eigenvalues.
#[derive(Debug, Clone)]
pub struct GroupNeighborhood {
    pub group: EigenGroup,
    pub below: Option<f64>,
    pub above: f64,
}

impl GroupNeighborhood {
    /// Distance to the nearest other eigenvalue.
    pub fn gap(&self) -> f64 {
        let up = self.above - self.group.lambda;
        match self.below {
            Some(b) => up.min(self.group.lambda - b),
            None => up,
        }
    }
}

pub fn locate_group(domain: &DomainSpec, target: &GroupTarget) -> Result<GroupNeighborhood, SpectrumError> {
    let mut count = 4;
    loop {
        let groups = spectrum_groups(domain, count);
        let pos = groups.iter().position(|g| match target {
            GroupTarget::Index(j) => g.index_j == *j,
            GroupTarget::Exact(r) => g.eigenvalue_exact == *r,
        });
        let overshoot = match target {
            GroupTarget::Index(j) => groups.iter().any(|g| g.index_j > *j),
            GroupTarget::Exact(r) => groups.iter().any(|g| g.eigenvalue_exact > *r),
        };
        match pos {
            Some(i) if i + 1 < groups.len() => {
                return Ok(GroupNeighborhood {
                    group: groups[i].clone(),
                    below: i.checked_sub(1).map(|b| groups[b].lambda),
                    above: groups[i + 1].lambda,
                })
            }
            None if overshoot => return Err(SpectrumError::NoSuchGroup(target.to_string())),
            _ => count *= 2,
        }
    }
}

/// Value of the `L²`-normalized eigenfunction `Π √(2/Lₐ) sin(nₐπxₐ/Lₐ)` at `point`.
pub fn eigenfunction_eval(mode: &EigenMode, domain: &DomainSpec, point: &[f64]) -> Result<f64, SpectrumError> {
    let lengths = domain.lengths();
    if point.len() != lengths.len() || mode.indices.len() != lengths.len() {
        return Err(SpectrumError::IndexArity {
            expected: lengths.len(),
            got: point.len(),
        });
    }
    let mut value = 1.0;
    for ((&x, &len), &n) in point.iter().zip(&lengths).zip(&mode.indices) {
        let slack = 1e-12 * len;
        if !(x >= -slack && x <= len + slack) {
            return Err(SpectrumError::OutOfDomain(point.to_vec()));
        }
        if x <= 0.0 || x >= len {
            return Ok(0.0);
        }
        value *= (2.0 / len).sqrt() * (n as f64 * PI * x / len).sin();
    }
    Ok(value)
}

/// One row of the exported spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub indices: Vec<u32>,
    pub eigenvalue_num: i128,
    pub eigenvalue_den: i128,
    pub j: usize,
    pub k: usize,
}

pub fn spectrum_entries(groups: &[EigenGroup]) -> Vec<SpectrumEntry> {
    groups
        .iter()
        .flat_map(|g| {
            g.modes.iter().map(move |m| SpectrumEntry {
                indices: m.indices.clone(),
                eigenvalue_num: *g.eigenvalue_exact.numer(),
                eigenvalue_den: *g.eigenvalue_exact.denom(),
                j: g.index_j,
                k: g.multiplicity,
            })
        })
        .collect()
}

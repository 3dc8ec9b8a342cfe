//! Spiral radius families used to shape the moth position update.
//!
//! Each [`SpiralKernel`] maps a trajectory parameter `t` to a radial
//! envelope `S(t)`, which replaces the `e^{qt}` factor of the classic
//! logarithmic-spiral move. The polar angle of every family is identified
//! with `t`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower clamp applied to `|t|` before evaluating the Lituus envelope.
pub const LITUUS_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpiralError {
    #[error("trajectory parameter must be finite, got {0}")]
    Domain(f64),
    #[error("shape constant must be finite, got {0}")]
    NonFiniteShape(f64),
    #[error("degenerate {kind} kernel: q = 0 gives an identically zero radius")]
    Degenerate { kind: SpiralKind },
    #[error("unknown spiral kind `{0}`")]
    UnknownKind(String),
}

/// The six spiral families, in LMFO index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpiralKind {
    Archimedean,
    Logarithmic,
    Fermat,
    Lituus,
    Equiangular,
    Random,
}

impl SpiralKind {
    pub const ALL: [SpiralKind; 6] = [
        SpiralKind::Archimedean,
        SpiralKind::Logarithmic,
        SpiralKind::Fermat,
        SpiralKind::Lituus,
        SpiralKind::Equiangular,
        SpiralKind::Random,
    ];

    /// 1-based variant index: Archimedean is LMFO1, Random is LMFO6.
    pub fn lmfo_index(self) -> usize {
        match self {
            SpiralKind::Archimedean => 1,
            SpiralKind::Logarithmic => 2,
            SpiralKind::Fermat => 3,
            SpiralKind::Lituus => 4,
            SpiralKind::Equiangular => 5,
            SpiralKind::Random => 6,
        }
    }

    pub fn from_lmfo_index(index: usize) -> Option<Self> {
        Self::ALL.get(index.checked_sub(1)?).copied()
    }

    /// Variant label such as `LMFO3`.
    pub fn lmfo_name(self) -> String {
        format!("LMFO{}", self.lmfo_index())
    }

    pub fn name(self) -> &'static str {
        match self {
            SpiralKind::Archimedean => "archimedean",
            SpiralKind::Logarithmic => "logarithmic",
            SpiralKind::Fermat => "fermat",
            SpiralKind::Lituus => "lituus",
            SpiralKind::Equiangular => "equiangular",
            SpiralKind::Random => "random",
        }
    }
}

impl fmt::Display for SpiralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpiralKind {
    type Err = SpiralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(idx) = lower.strip_prefix("lmfo") {
            return idx
                .parse::<usize>()
                .ok()
                .and_then(Self::from_lmfo_index)
                .ok_or_else(|| SpiralError::UnknownKind(s.to_string()));
        }
        Self::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| SpiralError::UnknownKind(s.to_string()))
    }
}

/// A spiral family together with its shape constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralKernel {
    pub kind: SpiralKind,
    pub q: f64,
    /// Clamp for `|t|` in the Lituus envelope.
    #[serde(default = "default_lituus_epsilon")]
    pub lituus_epsilon: f64,
    /// Use the textbook Fermat radius `q·sqrt(|t|)·sign(t)` instead of `|q|^t`.
    #[serde(default)]
    pub fermat_standard: bool,
}

fn default_lituus_epsilon() -> f64 {
    LITUUS_EPSILON
}

impl SpiralKernel {
    pub fn new(kind: SpiralKind, q: f64) -> Self {
        SpiralKernel {
            kind,
            q,
            lituus_epsilon: LITUUS_EPSILON,
            fermat_standard: false,
        }
    }

    /// The logarithmic spiral of the original algorithm, `e^{t}`.
    pub fn classic() -> Self {
        Self::new(SpiralKind::Equiangular, 1.0)
    }

    pub fn with_fermat_standard(mut self, standard: bool) -> Self {
        self.fermat_standard = standard;
        self
    }

    pub fn validate(&self) -> Result<(), SpiralError> {
        if !self.q.is_finite() {
            return Err(SpiralError::NonFiniteShape(self.q));
        }
        if self.kind == SpiralKind::Lituus && self.q == 0.0 {
            return Err(SpiralError::Degenerate { kind: self.kind });
        }
        Ok(())
    }

    /// Whether evaluating the envelope consumes a random draw.
    pub fn is_stochastic(&self) -> bool {
        self.kind == SpiralKind::Random
    }

    /// Radial envelope `S(t)`. The stream is only consumed for [`SpiralKind::Random`].
    pub fn radial_envelope<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64, SpiralError> {
        let draw = if self.is_stochastic() {
            rng.random::<f64>()
        } else {
            0.0
        };
        self.envelope_with_draw(t, draw)
    }

    /// Envelope with the random factor of the Random family supplied by the caller.
    /// `draw` is ignored by every other family.
    pub fn envelope_with_draw(&self, t: f64, draw: f64) -> Result<f64, SpiralError> {
        if !t.is_finite() {
            return Err(SpiralError::Domain(t));
        }
        self.validate()?;
        let q = self.q;
        let radius = match self.kind {
            SpiralKind::Archimedean => q * t,
            // log10(r) = q·t
            SpiralKind::Logarithmic => 10f64.powf(q * t),
            SpiralKind::Fermat if self.fermat_standard => q * t.abs().sqrt() * t.signum(),
            // r² = q^{2t}
            SpiralKind::Fermat => q.abs().powf(t),
            // r² = q²/t
            SpiralKind::Lituus => q / t.abs().max(self.lituus_epsilon).sqrt(),
            // ln(r) = q·t
            SpiralKind::Equiangular => (q * t).exp(),
            SpiralKind::Random => draw * t,
        };
        Ok(radius)
    }
}

/// Planar trace `(S(t)·cos 2πt, S(t)·sin 2πt)` for each sample.
pub fn trace_spiral<R: Rng + ?Sized>(
    kernel: &SpiralKernel,
    t_samples: &[f64],
    rng: &mut R,
) -> Result<Vec<(f64, f64)>, SpiralError> {
    t_samples
        .iter()
        .map(|&t| {
            let r = kernel.radial_envelope(t, rng)?;
            let angle = TAU * t;
            Ok((r * angle.cos(), r * angle.sin()))
        })
        .collect()
}

/// `count` evenly spaced samples over `[start, end]`.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            (0..count).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Renders a trace as `t,x,y` CSV.
pub fn trace_to_csv(t_samples: &[f64], points: &[(f64, f64)]) -> String {
    let mut out = String::from("t,x,y\n");
    for (t, (x, y)) in t_samples.iter().zip(points) {
        out.push_str(&format!("{t},{x},{y}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(kind: SpiralKind, q: f64, t: f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        SpiralKernel::new(kind, q).radial_envelope(t, &mut rng).unwrap()
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(env(SpiralKind::Equiangular, 3.7, 0.0), 1.0);
        assert_eq!(env(SpiralKind::Archimedean, 1.0, 1.0), 1.0);
        assert_eq!(env(SpiralKind::Archimedean, 2.0, 3.0), 6.0);
        assert_eq!(env(SpiralKind::Lituus, 2.0, 4.0), 1.0);
        assert_eq!(env(SpiralKind::Logarithmic, 0.0, 7.0), 1.0);
    }

    #[test]
    fn fermat_unit_shape_is_constant() {
        for t in [-2.0, -0.3, 0.0, 0.7, 1.0, 12.5] {
            assert_eq!(env(SpiralKind::Fermat, 1.0, t), 1.0);
        }
    }

    #[test]
    fn fermat_standard_switch() {
        let k = SpiralKernel::new(SpiralKind::Fermat, 2.0).with_fermat_standard(true);
        assert_eq!(k.envelope_with_draw(4.0, 0.0).unwrap(), 4.0);
        assert_eq!(k.envelope_with_draw(-4.0, 0.0).unwrap(), -4.0);
    }

    #[test]
    fn lituus_is_clamped_at_origin() {
        let r = env(SpiralKind::Lituus, 1.0, 0.0);
        assert!((r - 1.0 / LITUUS_EPSILON.sqrt()).abs() < 1e-9);
        assert!(r.is_finite());
    }

    #[test]
    fn errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let k = SpiralKernel::new(SpiralKind::Equiangular, 1.0);
        assert!(matches!(
            k.radial_envelope(f64::NAN, &mut rng),
            Err(SpiralError::Domain(_))
        ));
        assert!(matches!(
            k.radial_envelope(f64::INFINITY, &mut rng),
            Err(SpiralError::Domain(_))
        ));
        let lituus = SpiralKernel::new(SpiralKind::Lituus, 0.0);
        assert_eq!(
            lituus.radial_envelope(0.5, &mut rng),
            Err(SpiralError::Degenerate { kind: SpiralKind::Lituus })
        );
    }

    #[test]
    fn random_kernel_consumes_stream_others_do_not() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        SpiralKernel::new(SpiralKind::Lituus, 1.0)
            .radial_envelope(0.3, &mut a)
            .unwrap();
        assert_eq!(a.random::<u64>(), b.random::<u64>());

        let r = SpiralKernel::new(SpiralKind::Random, 1.0)
            .radial_envelope(2.0, &mut a)
            .unwrap();
        assert!((0.0..2.0).contains(&r));
    }

    #[test]
    fn kind_parsing_and_names() {
        for kind in SpiralKind::ALL {
            assert_eq!(kind.name().parse::<SpiralKind>().unwrap(), kind);
            assert_eq!(kind.lmfo_name().parse::<SpiralKind>().unwrap(), kind);
        }
        assert_eq!(SpiralKind::Fermat.lmfo_name(), "LMFO3");
        assert!("LMFO7".parse::<SpiralKind>().is_err());
        assert!("spiral".parse::<SpiralKind>().is_err());
    }

    #[test]
    fn trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let eq = SpiralKernel::new(SpiralKind::Equiangular, 1.0);
        assert_eq!(trace_spiral(&eq, &[0.0], &mut rng).unwrap(), vec![(1.0, 0.0)]);

        let arch = SpiralKernel::new(SpiralKind::Archimedean, 1.0);
        let p = trace_spiral(&arch, &[0.5, 0.25], &mut rng).unwrap();
        assert!((p[0].0 + 0.5).abs() < 1e-15 && p[0].1.abs() < 1e-15);
        assert!(p[1].0.abs() < 1e-15 && (p[1].1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn trace_csv_layout() {
        let csv = trace_to_csv(&[0.0, 0.5], &[(1.0, 0.0), (-0.5, 0.1)]);
        assert_eq!(csv, "t,x,y\n0,1,0\n0.5,-0.5,0.1\n");
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-2.0, 1.0, 4);
        assert_eq!(v, vec![-2.0, -1.0, 0.0, 1.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}

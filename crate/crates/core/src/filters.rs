//! Spectral filter functions applied multiplicatively to transform-domain
//! coefficients, and the heat kernel they generalise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::spectral::SpectralDecomposition;
use crate::{Error, Result};

/// Default part-sine sub-range width.
pub const DEFAULT_RHO: f64 = 0.579;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    /// `e^{−λ t}`: emphasises low frequencies.
    Heat { t: f64 },
    /// `e^{−(R − λ) t}` with `R` the largest eigenvalue: emphasises high
    /// frequencies.
    AntiHeat { t: f64 },
    /// Half-period sine bump on `[ρ(r−2), ρr]`, zero elsewhere.
    PartSine { r: u32, rho: f64 },
    /// `λ` itself.
    LambdaIdentity,
}

impl FilterSpec {
    pub fn heat(t: f64) -> Result<Self> {
        FilterSpec::Heat { t }.validated()
    }

    pub fn anti_heat(t: f64) -> Result<Self> {
        FilterSpec::AntiHeat { t }.validated()
    }

    pub fn part_sine(r: u32, rho: f64) -> Result<Self> {
        FilterSpec::PartSine { r, rho }.validated()
    }

    fn validated(self) -> Result<Self> {
        match self {
            FilterSpec::Heat { t } | FilterSpec::AntiHeat { t } if !(t > 0.0 && t.is_finite()) => {
                Err(Error::InvalidInput(format!("filter time t must be positive, got {t}")))
            }
            FilterSpec::PartSine { r, .. } if r < 1 => {
                Err(Error::InvalidInput("part-sine index r must be >= 1".into()))
            }
            FilterSpec::PartSine { rho, .. } if !(rho > 0.0 && rho.is_finite()) => {
                Err(Error::InvalidInput(format!("part-sine rho must be positive, got {rho}")))
            }
            ok => Ok(ok),
        }
    }

    /// Response at a single eigenvalue; `r_max` is the largest eigenvalue of
    /// the graph (only used by the anti-heat filter).
    pub fn response(&self, lambda: f64, r_max: f64) -> f64 {
        match *self {
            FilterSpec::Heat { t } => (-lambda * t).exp(),
            FilterSpec::AntiHeat { t } => (-(r_max - lambda) * t).exp(),
            FilterSpec::PartSine { r, rho } => {
                let lo = rho * (r as f64 - 2.0);
                let hi = rho * r as f64;
                if (lo..=hi).contains(&lambda) {
                    (PI / (2.0 * rho) * (lambda - lo)).sin()
                } else {
                    0.0
                }
            }
            FilterSpec::LambdaIdentity => lambda,
        }
    }
}

/// Short names: `H1`, `AH3`, `PS6` (default ρ) or `PS6:0.5`, and `X`.
impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FilterSpec::Heat { t } => write!(f, "H{t}"),
            FilterSpec::AntiHeat { t } => write!(f, "AH{t}"),
            FilterSpec::PartSine { r, rho } if rho == DEFAULT_RHO => write!(f, "PS{r}"),
            FilterSpec::PartSine { r, rho } => write!(f, "PS{r}:{rho}"),
            FilterSpec::LambdaIdentity => write!(f, "X"),
        }
    }
}

impl FromStr for FilterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("unrecognised filter {s:?}"));
        let number = |v: &str| v.parse::<f64>().map_err(|_| bad());
        if s == "X" {
            Ok(FilterSpec::LambdaIdentity)
        } else if let Some(rest) = s.strip_prefix("AH") {
            FilterSpec::anti_heat(number(rest)?)
        } else if let Some(rest) = s.strip_prefix("PS") {
            let (r, rho) = match rest.split_once(':') {
                Some((r, rho)) => (r, number(rho)?),
                None => (rest, DEFAULT_RHO),
            };
            FilterSpec::part_sine(r.parse().map_err(|_| bad())?, rho)
        } else if let Some(rest) = s.strip_prefix('H') {
            FilterSpec::heat(number(rest)?)
        } else {
            Err(bad())
        }
    }
}

/// Filter responses `H[λ_l]` for every eigenvalue.
///
/// `r_max` must be at least the largest eigenvalue for the anti-heat filter.
pub fn evaluate_filter(f: &FilterSpec, eigenvalues: &[f64], r_max: f64) -> Result<Vec<f64>> {
    if let Some(bad) = eigenvalues.iter().find(|l| !l.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite eigenvalue {bad}")));
    }
    if let FilterSpec::AntiHeat { .. } = f {
        let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if r_max < max {
            return Err(Error::InvalidInput(format!(
                "anti-heat R = {r_max} is below the largest eigenvalue {max}"
            )));
        }
    }
    Ok(eigenvalues.iter().map(|&l| f.response(l, r_max)).collect())
}

/// Named, ordered set of filters.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filters: Vec<(String, FilterSpec)>,
}

impl FilterBank {
    pub fn new(filters: Vec<FilterSpec>) -> Result<Self> {
        let filters: Vec<(String, FilterSpec)> =
            filters.into_iter().map(|f| (f.to_string(), f)).collect();
        for (i, (name, _)) in filters.iter().enumerate() {
            if filters[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidInput(format!("duplicate filter {name}")));
            }
        }
        Ok(FilterBank { filters })
    }

    /// Parses a comma-separated list such as `X,H1,AH3,PS11:0.579`.
    pub fn parse(list: &str) -> Result<Self> {
        let specs = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<FilterSpec>>>()?;
        if specs.is_empty() {
            return Err(Error::InvalidInput("empty filter list".into()));
        }
        FilterBank::new(specs)
    }

    /// The ten filters `X, H1, H3, H6, AH1, AH3, AH6, PS1, PS6, PS11`.
    pub fn standard() -> Self {
        let mut specs = vec![FilterSpec::LambdaIdentity];
        specs.extend([1.0, 3.0, 6.0].map(|t| FilterSpec::Heat { t }));
        specs.extend([1.0, 3.0, 6.0].map(|t| FilterSpec::AntiHeat { t }));
        specs.extend([1, 6, 11].map(|r| FilterSpec::PartSine { r, rho: DEFAULT_RHO }));
        FilterBank::new(specs).expect("standard names are unique")
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FilterSpec)> {
        self.filters.iter().map(|(n, f)| (n.as_str(), f))
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

impl fmt::Display for FilterBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.filters.iter().map(|(n, _)| n.as_str()).collect();
        f.write_str(&names.join(","))
    }
}

/// Heat kernel `K_t = V diag(e^{−λ t}) Vᵀ`.
pub fn heat_kernel_matrix(dec: &SpectralDecomposition, t: f64) -> DMatrix<f64> {
    let v = dec.eigenvectors();
    let weights: DVector<f64> = dec.eigenvalues().map(|l| (-l * t).exp());
    let mut scaled = v.clone();
    for (mut col, w) in scaled.column_iter_mut().zip(weights.iter()) {
        col *= *w;
    }
    scaled * v.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian, random_connected_graph, Graph};
    use crate::spectral::{decompose, gfrft_matrix};
    use crate::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_values() {
        assert_eq!(FilterSpec::Heat { t: 3.0 }.response(0.0, 5.0), 1.0);
        assert_eq!(FilterSpec::AntiHeat { t: 1.0 }.response(4.2, 4.2), 1.0);
        let ps6 = FilterSpec::PartSine { r: 6, rho: 0.579 };
        assert!((ps6.response(0.579 * 5.0, 0.0) - 1.0).abs() < 1e-12);
        let ps1 = FilterSpec::PartSine { r: 1, rho: 0.579 };
        assert!(ps1.response(0.579, 0.0).abs() < 1e-12);
        assert_eq!(ps1.response(0.6, 0.0), 0.0);
    }

    #[test]
    fn anti_heat_rejects_small_r() {
        let err = evaluate_filter(&FilterSpec::AntiHeat { t: 1.0 }, &[0.0, 3.0], 2.0);
        assert!(err.is_err());
        assert!(evaluate_filter(&FilterSpec::AntiHeat { t: 1.0 }, &[0.0, 3.0], 3.0).is_ok());
    }

    #[test]
    fn monotone_responses() {
        let lambdas: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let r = 9.8;
        for t in [1.0, 3.0, 6.0] {
            let h = evaluate_filter(&FilterSpec::Heat { t }, &lambdas, r).unwrap();
            let ah = evaluate_filter(&FilterSpec::AntiHeat { t }, &lambdas, r).unwrap();
            assert!(h.iter().all(|&x| x > 0.0 && x <= 1.0));
            assert!(ah.iter().all(|&x| x > 0.0 && x <= 1.0));
            // strictness only where the exponentials are representable
            assert!(h.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0));
            assert!(ah.windows(2).all(|w| w[1] > w[0]));
        }
        let x = evaluate_filter(&FilterSpec::LambdaIdentity, &lambdas, r).unwrap();
        assert_eq!(x, lambdas);
    }

    #[test]
    fn part_sine_support() {
        let lambdas: Vec<f64> = (0..2000).map(|i| i as f64 * 0.005).collect();
        for r in [1u32, 6, 11] {
            let f = FilterSpec::PartSine { r, rho: DEFAULT_RHO };
            let lo = DEFAULT_RHO * (r as f64 - 2.0);
            let hi = DEFAULT_RHO * r as f64;
            for &l in &lambdas {
                let v = f.response(l, 0.0);
                assert!((0.0..=1.0).contains(&v));
                if l < lo || l > hi {
                    assert_eq!(v, 0.0);
                } else if l > lo + 1e-9 && l < hi - 1e-9 {
                    assert!(v > 0.0);
                }
            }
        }
    }

    #[test]
    fn grammar() {
        let bank = FilterBank::parse("X,H1,AH3,PS11:0.579,PS6:0.5").unwrap();
        let names: Vec<&str> = bank.iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["X", "H1", "AH3", "PS11", "PS6:0.5"]);
        assert_eq!(FilterBank::standard().to_string(), "X,H1,H3,H6,AH1,AH3,AH6,PS1,PS6,PS11");
        assert!(FilterBank::parse("H1,H1").is_err());
        assert!(FilterBank::parse("Q2").is_err());
        assert!(FilterBank::parse("H0").is_err());
        assert!(FilterBank::parse("PS0").is_err());
        assert!("H1.5".parse::<FilterSpec>().is_ok());
    }

    #[test]
    fn kernel_at_zero_time_is_identity() {
        let dec = decompose(&laplacian(&Graph::path(5).unwrap())).unwrap();
        let k = heat_kernel_matrix(&dec, 0.0);
        assert!((k - DMatrix::<f64>::identity(5, 5)).norm() < 1e-10);
    }

    #[test]
    fn kernel_rows_conserve_heat() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let g = random_connected_graph(rng.gen_range(3..12), 0.4, &mut rng);
            let dec = decompose(&laplacian(&g)).unwrap();
            let k = heat_kernel_matrix(&dec, 1.5);
            assert!((&k - k.transpose()).amax() < 1e-12);
            for row in k.row_iter() {
                assert!((row.sum() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kernel_equals_filtered_spectrum() {
        // oracle: sum over eigenpairs written out directly
        let g = Graph::path(3).unwrap();
        let dec = decompose(&laplacian(&g)).unwrap();
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let k = heat_kernel_matrix(&dec, 1.0);
        let direct = &k * &x;

        let op = gfrft_matrix(&dec, 1.0).unwrap();
        let spec = op.apply_real(&x).unwrap().coefficients;
        let h = evaluate_filter(&FilterSpec::Heat { t: 1.0 }, dec.eigenvalues().as_slice(), 3.0).unwrap();
        let filtered = DVector::from_iterator(3, spec.iter().zip(&h).map(|(c, w)| c * *w));
        let back = op.inverse().apply(&filtered).unwrap().coefficients;

        let v = dec.eigenvectors();
        for n in 0..3 {
            let mut oracle = 0.0;
            for m in 0..3 {
                for l in 0..3 {
                    oracle += (-dec.eigenvalues()[l]).exp() * v[(n, l)] * v[(m, l)] * x[m];
                }
            }
            assert!((direct[n] - oracle).abs() < 1e-10);
            assert!((back[n] - C64::new(oracle, 0.0)).norm() < 1e-10);
        }
    }
}

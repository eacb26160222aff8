//! Reproducible samplers for states, POVMs, instruments and stochastic matrices.
//!
//! Every sampler draws from a ChaCha stream keyed by `(seed, stream)`, so
//! instance `k` of a batch is the same whichever thread evaluates it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, HermitianOperator};
use crate::objects::{DensityMatrix, Instrument, KrausMap, OutcomeLabel, Povm, StochasticMatrix};
use crate::tol;

const NORMALIZER_ATTEMPTS: usize = 8;

/// Parameters for the config-driven samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Instance index; distinct streams are independent.
    pub stream: u64,
    pub dim: usize,
    pub outcome_count: usize,
    /// State rank for [`random_mixed`]; `None` means full rank.
    pub rank: Option<usize>,
    /// Kraus operators per instrument branch.
    pub kraus_count: usize,
    /// Sample projective POVMs.
    pub projective: bool,
}

impl SamplerConfig {
    pub fn new(seed: u64, dim: usize) -> Self {
        SamplerConfig {
            seed,
            stream: 0,
            dim,
            outcome_count: 2,
            rank: None,
            kraus_count: 1,
            projective: false,
        }
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self.seed, self.stream)
    }
}

/// A seeded random source with the sampling routines.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    /// Real and imaginary parts independent standard normals.
    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.rng.sample(StandardNormal), self.rng.sample(StandardNormal))
    }

    pub fn ginibre(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = self.complex_normal();
            }
        }
        m
    }

    /// `dim_out × dim_in` matrix with orthonormal columns, Haar distributed.
    pub fn haar_isometry(&mut self, dim_in: usize, dim_out: usize) -> ComplexMatrix {
        assert!(dim_in <= dim_out, "isometry needs dim_in <= dim_out");
        let qr = self.ginibre(dim_out, dim_in).qr();
        let r = qr.r();
        let mut q = qr.q();
        for j in 0..dim_in {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
            for i in 0..dim_out {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    pub fn haar_unitary(&mut self, dim: usize) -> ComplexMatrix {
        self.haar_isometry(dim, dim)
    }

    pub fn pure_state(&mut self, dim: usize) -> DensityMatrix {
        let v: Vec<Complex64> = (0..dim).map(|_| self.complex_normal()).collect();
        DensityMatrix::pure(&v).expect("Gaussian vector is nonzero")
    }

    /// `G G† / tr` with `G` a `dim × rank` Ginibre matrix.
    pub fn mixed_state(&mut self, dim: usize, rank: usize) -> DensityMatrix {
        assert!((1..=dim).contains(&rank), "rank must lie in 1..=dim");
        let g = self.ginibre(dim, rank);
        let gg = &g * g.adjoint();
        let tr = gg.trace().re;
        DensityMatrix::new(HermitianOperator::from_matrix_unchecked(gg.unscale(tr)))
            .expect("Wishart matrix is a valid state")
    }

    /// `Πᵢ = S^{-1/2} GᵢGᵢ† S^{-1/2}` with `S = Σ GᵢGᵢ†`.
    pub fn povm(&mut self, dim: usize, outcomes: usize) -> Result<Povm> {
        if outcomes == 0 {
            return Err(Error::InvalidConfig {
                reason: "a POVM needs at least one outcome".into(),
            });
        }
        for _ in 0..NORMALIZER_ATTEMPTS {
            let parts: Vec<ComplexMatrix> = (0..outcomes)
                .map(|_| {
                    let g = self.ginibre(dim, dim);
                    &g * g.adjoint()
                })
                .collect();
            let total = parts.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, p| acc + p);
            let eig = eig_hermitian(&HermitianOperator::from_matrix_unchecked(total))?;
            let smallest = eig.eigenvalues.last().copied().unwrap_or(0.0);
            if smallest <= tol::SUPPORT * eig.eigenvalues[0] {
                continue;
            }
            let inv_sqrt = eig.map_spectrum(|x| 1.0 / x.sqrt(), false)?.into_matrix();
            let elements = parts
                .iter()
                .map(|p| HermitianOperator::from_matrix_unchecked(&inv_sqrt * p * &inv_sqrt))
                .collect();
            return Povm::from_elements(elements);
        }
        Err(Error::SingularNormalizer {
            attempts: NORMALIZER_ATTEMPTS,
        })
    }

    /// Projectors onto a Haar-random basis, the basis vectors dealt
    /// round-robin into `outcomes ≤ dim` groups.
    pub fn projective_povm(&mut self, dim: usize, outcomes: usize) -> Result<Povm> {
        if outcomes == 0 || outcomes > dim {
            return Err(Error::InvalidConfig {
                reason: format!("projective POVM needs 1..={dim} outcomes, got {outcomes}"),
            });
        }
        let u = self.haar_unitary(dim);
        let mut groups = vec![HermitianOperator::zeros(dim); outcomes];
        for j in 0..dim {
            let v: Vec<Complex64> = u.column(j).iter().copied().collect();
            groups[j % outcomes] = groups[j % outcomes].add(&HermitianOperator::projector_onto(&v));
        }
        Povm::from_elements(groups)
    }

    /// `Πᵢ = U diag(p(i|x)) U†` for a Haar `U` and random conditionals.
    pub fn commuting_povm(&mut self, dim: usize, outcomes: usize) -> Result<Povm> {
        let u = self.haar_unitary(dim);
        let v = self.stochastic(outcomes, dim)?;
        let elements = (0..outcomes)
            .map(|i| {
                let diag: Vec<f64> = (0..dim).map(|x| v.get(i, x)).collect();
                HermitianOperator::from_real_diagonal(&diag).conjugate_by(&u)
            })
            .collect();
        Povm::from_elements(elements)
    }

    /// Branch Kraus operators are consecutive `dim × dim` blocks of a Haar
    /// isometry `dim → dim·outcomes·kraus_count`.
    pub fn instrument(&mut self, dim: usize, outcomes: usize, kraus_count: usize) -> Result<Instrument> {
        if outcomes == 0 || kraus_count == 0 {
            return Err(Error::InvalidConfig {
                reason: "instrument needs at least one outcome and one Kraus operator".into(),
            });
        }
        let w = self.haar_isometry(dim, dim * outcomes * kraus_count);
        let branches = (0..outcomes)
            .map(|i| {
                let kraus = (0..kraus_count)
                    .map(|m| w.rows((i * kraus_count + m) * dim, dim).into_owned())
                    .collect();
                KrausMap::new(dim, dim, kraus)
            })
            .collect::<Result<Vec<_>>>()?;
        Instrument::new(OutcomeLabel::indexed(outcomes), branches)
    }

    /// Columns drawn from the flat Dirichlet distribution.
    pub fn stochastic(&mut self, rows: usize, cols: usize) -> Result<StochasticMatrix> {
        let mut m = DMatrix::<f64>::zeros(rows, cols);
        for mut col in m.column_iter_mut() {
            for x in col.iter_mut() {
                *x = self.rng.sample(Exp1);
            }
            let s: f64 = col.iter().sum();
            col /= s;
        }
        StochasticMatrix::new(m)
    }

    /// A uniformly random `n × n` permutation matrix.
    pub fn permutation(&mut self, n: usize) -> StochasticMatrix {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut self.rng);
        let m = DMatrix::from_fn(n, n, |j, i| if perm[i] == j { 1.0 } else { 0.0 });
        StochasticMatrix::new(m).expect("permutation matrix is stochastic")
    }

    /// Random positive weights summing to one.
    pub fn weights(&mut self, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| self.rng.sample::<f64, _>(Exp1) + 1e-3).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }
}

pub fn random_pure(cfg: &SamplerConfig) -> DensityMatrix {
    cfg.sampler().pure_state(cfg.dim)
}

pub fn random_mixed(cfg: &SamplerConfig) -> DensityMatrix {
    cfg.sampler().mixed_state(cfg.dim, cfg.rank.unwrap_or(cfg.dim))
}

pub fn random_povm(cfg: &SamplerConfig) -> Result<Povm> {
    let mut s = cfg.sampler();
    if cfg.projective {
        s.projective_povm(cfg.dim, cfg.outcome_count)
    } else {
        s.povm(cfg.dim, cfg.outcome_count)
    }
}

pub fn random_commuting_povm(cfg: &SamplerConfig) -> Result<Povm> {
    cfg.sampler().commuting_povm(cfg.dim, cfg.outcome_count)
}

pub fn random_instrument(cfg: &SamplerConfig) -> Result<Instrument> {
    cfg.sampler().instrument(cfg.dim, cfg.outcome_count, cfg.kraus_count)
}

pub fn random_stochastic(cfg: &SamplerConfig, rows: usize, cols: usize) -> Result<StochasticMatrix> {
    cfg.sampler().stochastic(rows, cols)
}

//! Spin bookkeeping and product-space operators for a two-ion cluster.
//!
//! Spins are stored as `2S` in an integer so half-integers stay exact.
//! Operator matrices live in the |S, m⟩ basis with m descending from +S to
//! -S (index 0 is m = +S); dimer operators use the product basis
//! |S1, m1⟩⊗|S2, m2⟩ in row-major (Kronecker) order.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use std::fmt;
use std::str::FromStr;

use crate::constants::c_mu;
use crate::error::{Error, Result};
use crate::scalar::{lift, lower, Real};

/// Largest product-space dimension `dimer_hamiltonian` will build.
pub const DIMENSION_CAP: usize = 1024;

/// A single ion's spin quantum number, stored as `2S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinValue {
    twice: u32,
}

impl SpinValue {
    /// Build from `2S`. Rejects zero: a spin-0 ion has no moment to couple.
    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin("0".to_string()));
        }
        Ok(SpinValue { twice })
    }

    /// `2S` as stored.
    #[inline]
    pub fn twice(self) -> u32 {
        self.twice
    }

    /// Number of m states, `2S + 1`.
    #[inline]
    pub fn multiplicity(self) -> usize {
        self.twice as usize + 1
    }

    /// S as a float.
    #[inline]
    pub fn value<R: Real>(self) -> R {
        lift(self.twice as f64 / 2.0)
    }

    /// S(S+1), computed as the exact rational `2S(2S+2)/4`.
    #[inline]
    pub fn casimir<R: Real>(self) -> R {
        let t = self.twice as f64;
        lift(t * (t + 2.0) / 4.0)
    }
}

impl fmt::Display for SpinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&spin_label(self.twice))
    }
}

impl FromStr for SpinValue {
    type Err = Error;

    /// Accepts `"5/2"`, `"2.5"`, and `"3"` style spellings.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let bad = || Error::InvalidSpin(trimmed.to_string());
        if let Some((num, den)) = trimmed.split_once('/') {
            if den.trim() != "2" {
                return Err(bad());
            }
            let twice: u32 = num.trim().parse().map_err(|_| bad())?;
            return SpinValue::from_twice(twice).map_err(|_| bad());
        }
        let value: f64 = trimmed.parse().map_err(|_| bad())?;
        if !value.is_finite() || value <= 0.0 || value > 1e4 {
            return Err(bad());
        }
        let twice = (2.0 * value).round();
        if (2.0 * value - twice).abs() > 1e-9 {
            return Err(bad());
        }
        SpinValue::from_twice(twice as u32).map_err(|_| bad())
    }
}

/// Human-readable spin label for a `2S` value: "0", "1/2", "1", "3/2", ...
pub fn spin_label(twice: u32) -> String {
    if twice.is_multiple_of(2) {
        format!("{}", twice / 2)
    } else {
        format!("{twice}/2")
    }
}

/// The three Cartesian spin operators for one ion.
#[derive(Clone, Debug)]
pub struct OperatorTriple<R: Real> {
    pub sx: DMatrix<Complex<R>>,
    pub sy: DMatrix<Complex<R>>,
    pub sz: DMatrix<Complex<R>>,
}

impl<R: Real> OperatorTriple<R> {
    /// Matrix dimension, `2S + 1`.
    pub fn dim(&self) -> usize {
        self.sz.nrows()
    }
}

/// Spin operators for spin `s` from the ladder-operator matrix elements
/// `S±|S,m⟩ = sqrt(S(S+1) - m(m±1)) |S,m±1⟩`.
pub fn spin_matrices<R: Real>(s: SpinValue) -> OperatorTriple<R> {
    let t = s.twice() as i64;
    let n = s.multiplicity();
    let mut sx = DMatrix::<Complex<R>>::zeros(n, n);
    let mut sy = DMatrix::<Complex<R>>::zeros(n, n);
    let mut sz = DMatrix::<Complex<R>>::zeros(n, n);
    for i in 0..n {
        // m at row i, exactly representable as (2S - 2i)/2.
        let m_twice = t - 2 * i as i64;
        sz[(i, i)] = Complex::new(lift(m_twice as f64 / 2.0), R::zero());
        if i > 0 {
            // S+ couples |S, m_i⟩ upward to row i-1; the squared coefficient
            // [2S(2S+2) - 2m(2m+2)] / 4 is an exact quarter-integer.
            let c2 = (t * (t + 2) - m_twice * (m_twice + 2)) as f64 / 4.0;
            let half_c: R = lift(c2.sqrt() / 2.0);
            sx[(i - 1, i)] = Complex::new(half_c, R::zero());
            sx[(i, i - 1)] = Complex::new(half_c, R::zero());
            sy[(i - 1, i)] = Complex::new(R::zero(), -half_c);
            sy[(i, i - 1)] = Complex::new(R::zero(), half_c);
        }
    }
    OperatorTriple { sx, sy, sz }
}

/// One total-spin multiplet of the coupled pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Multiplet<R: Real> {
    /// `2S_total`.
    pub twice_total_spin: u32,
    /// Energy in kelvin, with the S = |S1 - S2| multiplet at zero.
    pub energy_k: R,
    /// `2S_total + 1`.
    pub degeneracy: usize,
}

impl<R: Real> Multiplet<R> {
    /// Total spin as a float.
    pub fn total_spin(&self) -> R {
        lift(self.twice_total_spin as f64 / 2.0)
    }

    /// Total spin rendered as "0", "1/2", "1", ...
    pub fn spin_label(&self) -> String {
        spin_label(self.twice_total_spin)
    }
}

/// Zero-field spectrum of `H = -J S1·S2`, organised by total spin.
#[derive(Clone, Debug, PartialEq)]
pub struct DimerSpectrum<R: Real> {
    pub s1: SpinValue,
    pub s2: SpinValue,
    pub j_k: R,
    /// Multiplets ordered by ascending total spin, from |S1-S2| to S1+S2.
    pub multiplets: Vec<Multiplet<R>>,
}

impl<R: Real> DimerSpectrum<R> {
    /// Product-space dimension `(2S1+1)(2S2+1)`; always equals the sum of
    /// the multiplet degeneracies.
    pub fn dimension(&self) -> usize {
        self.s1.multiplicity() * self.s2.multiplicity()
    }
}

/// Closed-form multiplet energies of the exchange Hamiltonian.
///
/// For total spin S between |S1-S2| and S1+S2,
/// `E(S) = -(J/2) [S(S+1) - Smin(Smin+1)]`
/// with the minimum-S multiplet pinned at zero. The coefficient of -J is
/// assembled from the integer `2S` values, so tabulated spectra like
/// {0, -J, -3J, -6J, -10J, -15J} come out exact.
pub fn multiplet_spectrum<R: Real>(s1: SpinValue, s2: SpinValue, j_k: R) -> DimerSpectrum<R> {
    let t1 = s1.twice() as i64;
    let t2 = s2.twice() as i64;
    let t_min = (t1 - t2).abs();
    let t_max = t1 + t2;
    let mut multiplets = Vec::with_capacity(((t_max - t_min) / 2 + 1) as usize);
    for t in (t_min..=t_max).step_by(2) {
        // [2S(2S+2) - 2Smin(2Smin+2)] / 8 = [S(S+1) - Smin(Smin+1)] / 2,
        // exact in binary floating point (integer over a power of two).
        let coeff = (t * (t + 2) - t_min * (t_min + 2)) as f64 / 8.0;
        multiplets.push(Multiplet {
            twice_total_spin: t as u32,
            energy_k: -j_k * lift::<R>(coeff),
            degeneracy: t as usize + 1,
        });
    }
    DimerSpectrum {
        s1,
        s2,
        j_k,
        multiplets,
    }
}

/// Heisenberg dimer Hamiltonian with a longitudinal Zeeman term, in kelvin:
///
/// `H = -J S1·S2 - g (μB/kB) B (S1z + S2z)`
///
/// with `J` in K and `B` in Oe. Errors if the product space would exceed
/// [`DIMENSION_CAP`].
pub fn dimer_hamiltonian<R: Real>(
    s1: SpinValue,
    s2: SpinValue,
    j_k: R,
    b_oe: R,
    g: R,
) -> Result<DMatrix<Complex<R>>> {
    let dim = s1.multiplicity() * s2.multiplicity();
    if dim > DIMENSION_CAP {
        return Err(Error::DimensionTooLarge {
            dim,
            cap: DIMENSION_CAP,
        });
    }
    let a = spin_matrices::<R>(s1);
    let b = spin_matrices::<R>(s2);
    let id1 = DMatrix::<Complex<R>>::identity(a.dim(), a.dim());
    let id2 = DMatrix::<Complex<R>>::identity(b.dim(), b.dim());

    let exchange = a.sx.kronecker(&b.sx) + a.sy.kronecker(&b.sy) + a.sz.kronecker(&b.sz);
    let mz = a.sz.kronecker(&id2) + id1.kronecker(&b.sz);

    let minus_j = Complex::new(-j_k, R::zero());
    let zeeman = Complex::new(-g * c_mu::<R>() * b_oe, R::zero());
    Ok(exchange * minus_j + mz * zeeman)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order with the matching orthonormal
/// eigenvector columns. Rejects input whose deviation from Hermiticity
/// exceeds 1e-10 relative to the largest element.
pub fn diagonalize<R: Real>(h: &DMatrix<Complex<R>>) -> Result<(DVector<R>, DMatrix<Complex<R>>)> {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "diagonalize requires a square matrix");

    let mut scale = R::one();
    let mut max_dev = R::zero();
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(h[(i, j)].modulus());
            let dev = (h[(i, j)] - h[(j, i)].conjugate()).modulus();
            max_dev = max_dev.max(dev);
        }
    }
    if max_dev > lift::<R>(1e-10) * scale {
        return Err(Error::NotHermitian {
            max_dev: lower(max_dev),
        });
    }

    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("Hermitian eigenvalues are real and ordered")
    });
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::<Complex<R>>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

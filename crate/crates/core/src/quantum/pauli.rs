use super::{DenseOperator, C64, I, ONE, ZERO};
use crate::error::{Error, Result};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            0 => Ok(Pauli::I),
            1 => Ok(Pauli::X),
            2 => Ok(Pauli::Y),
            3 => Ok(Pauli::Z),
            _ => Err(Error::InvalidInput(format!("Pauli label {label} not in 0..4"))),
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::InvalidInput(format!("unknown Pauli '{c}'"))),
        }
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> Mat<C64> {
        let mut m = Mat::zeros(2, 2);
        match self {
            Pauli::I => {
                m[(0, 0)] = ONE;
                m[(1, 1)] = ONE;
            }
            Pauli::X => {
                m[(0, 1)] = ONE;
                m[(1, 0)] = ONE;
            }
            Pauli::Y => {
                m[(0, 1)] = -I;
                m[(1, 0)] = I;
            }
            Pauli::Z => {
                m[(0, 0)] = ONE;
                m[(1, 1)] = -ONE;
            }
        }
        m
    }

    /// Single-site product: self · other = phase · result.
    pub fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        let phase = match (self, other) {
            (X, Y) | (Y, Z) | (Z, X) => super::I,
            (Y, X) | (Z, Y) | (X, Z) => -super::I,
            _ => ONE,
        };
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        (phase, Pauli::from_bits(x1 ^ x2, z1 ^ z2))
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = ['I', 'X', 'Y', 'Z'][*self as usize];
        write!(f, "{c}")
    }
}

/// Tensor product of single-qubit Paulis, bit-packed in symplectic form.
///
/// Site `i` lives in bit `i % 64` of word `i / 64` of both the `x` and `z`
/// vectors; Y is the (x=1, z=1) pair and carries the phase `i` so that the
/// string is Hermitian.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    len: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliString {
    pub fn identity(len: usize) -> Self {
        let words = len.div_ceil(64);
        Self { len, x: vec![0; words], z: vec![0; words] }
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut s = Self::identity(paulis.len());
        for (i, &p) in paulis.iter().enumerate() {
            s.set(i, p);
        }
        s
    }

    pub fn from_labels(labels: &[u8]) -> Result<Self> {
        let paulis = labels.iter().map(|&l| Pauli::from_label(l)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_paulis(&paulis))
    }

    /// Parses strings such as `"IXYZ"`.
    pub fn parse(s: &str) -> Result<Self> {
        let paulis = s.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_paulis(&paulis))
    }

    /// `pauli` on `site`, identity elsewhere.
    pub fn single(len: usize, site: usize, pauli: Pauli) -> Self {
        let mut s = Self::identity(len);
        s.set(site, pauli);
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, site: usize) -> Pauli {
        let (w, b) = (site / 64, site % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, site: usize, p: Pauli) {
        assert!(site < self.len, "site {site} out of range");
        let (w, b) = (site / 64, site % 64);
        let (xb, zb) = p.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    pub fn labels(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i).label()).collect()
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(x, z)| (x | z).count_ones() as usize).sum()
    }

    /// Sites carrying a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i) != Pauli::I).collect()
    }

    fn num_y(&self) -> u32 {
        self.x.iter().zip(&self.z).map(|(x, z)| (x & z).count_ones()).sum()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        assert_eq!(self.len, other.len);
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity += ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones();
        }
        parity % 2 == 0
    }

    /// self · other = phase · result.
    pub fn mul(&self, other: &PauliString) -> (C64, PauliString) {
        assert_eq!(self.len, other.len);
        let mut phase = ONE;
        let mut out = Self::identity(self.len);
        for i in 0..self.len {
            let (ph, p) = self.get(i).mul(other.get(i));
            phase *= ph;
            out.set(i, p);
        }
        (phase, out)
    }

    /// Bit masks in basis-index convention (site 0 is the most significant bit).
    pub fn index_masks(&self) -> Result<(usize, usize)> {
        if self.len > 63 {
            return Err(Error::ResourceLimit("basis masks need N <= 63".into()));
        }
        let (mut xm, mut zm) = (0usize, 0usize);
        for i in 0..self.len {
            let bit = 1usize << (self.len - 1 - i);
            let (xb, zb) = self.get(i).bits();
            if xb {
                xm |= bit;
            }
            if zb {
                zm |= bit;
            }
        }
        Ok((xm, zm))
    }

    /// Action on computational basis state `|index⟩`: returns (phase, image index).
    ///
    /// P|i⟩ = i^{#Y} (−1)^{popcount(i & zmask)} |i ⊕ xmask⟩.
    #[inline]
    pub fn act_on_basis(index: usize, xm: usize, zm: usize, y_phase: C64) -> (C64, usize) {
        let sign = if (index & zm).count_ones() % 2 == 1 { -y_phase } else { y_phase };
        (sign, index ^ xm)
    }

    /// i^{#Y}.
    pub fn y_phase(&self) -> C64 {
        [ONE, I, -ONE, -I][(self.num_y() % 4) as usize]
    }

    /// Applies the string to a qubit state vector of length 2^N.
    pub fn apply(&self, amps: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![ZERO; amps.len()];
        self.apply_into(amps, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, amps: &[C64], out: &mut [C64]) -> Result<()> {
        if amps.len() != 1usize << self.len || out.len() != amps.len() {
            return Err(Error::DimensionMismatch(format!(
                "Pauli string on {} qubits applied to vector of length {}",
                self.len,
                amps.len()
            )));
        }
        let (xm, zm) = self.index_masks()?;
        let yp = self.y_phase();
        for (i, a) in amps.iter().enumerate() {
            let (ph, j) = Self::act_on_basis(i, xm, zm, yp);
            out[j] = ph * a;
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        let mut op = DenseOperator::zeros(2, self.len)?;
        let (xm, zm) = self.index_masks()?;
        let yp = self.y_phase();
        for i in 0..op.dim() {
            let (ph, j) = Self::act_on_basis(i, xm, zm, yp);
            op.mat[(j, i)] = ph;
        }
        Ok(op)
    }

    /// All 4^len strings in lexicographic label order (site 0 slowest).
    pub fn all(len: usize) -> impl Iterator<Item = PauliString> {
        (0..4usize.pow(len as u32)).map(move |mut k| {
            let mut labels = vec![0u8; len];
            for i in (0..len).rev() {
                labels[i] = (k % 4) as u8;
                k /= 4;
            }
            PauliString::from_labels(&labels).expect("labels in range")
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.get(i))?;
        }
        Ok(())
    }
}

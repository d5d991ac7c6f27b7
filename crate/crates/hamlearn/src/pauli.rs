//! Symplectic Pauli strings.
//!
//! A string on `n <= 64` qubits is stored as two bit masks. Bit `q` of `x`
//! and `z` encodes the letter on qubit `q` as `(0,0)=I`, `(1,0)=X`,
//! `(1,1)=Y`, `(0,1)=Z`. The string itself carries no phase; with
//! `Y = iXZ` every phase-free string is Hermitian, and phases produced by
//! multiplication are returned separately as a [`PauliPhase`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

pub const MAX_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

    pub fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    /// `(x, z)` bits of the letter.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    /// Single-qubit commutation.
    pub fn commutes_with(self, other: Letter) -> bool {
        self == Letter::I || other == Letter::I || self == other
    }
}

/// A power of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PauliPhase(u8);

impl PauliPhase {
    pub const ONE: PauliPhase = PauliPhase(0);
    pub const I: PauliPhase = PauliPhase(1);
    pub const MINUS_ONE: PauliPhase = PauliPhase(2);
    pub const MINUS_I: PauliPhase = PauliPhase(3);

    pub fn new(power_of_i: u32) -> Self {
        PauliPhase((power_of_i % 4) as u8)
    }

    pub fn power_of_i(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for PauliPhase {
    type Output = PauliPhase;
    fn mul(self, rhs: PauliPhase) -> PauliPhase {
        PauliPhase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString { n: n as u8, x: 0, z: 0 }
    }

    pub fn from_bits(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooLarge { what: "PauliString", n, limit: MAX_QUBITS });
        }
        if (x | z) & !mask(n) != 0 {
            return Err(Error::Format(format!("bit masks exceed {n} qubits")));
        }
        Ok(PauliString { n: n as u8, x, z })
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut p = PauliString::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        p
    }

    /// A single non-trivial letter on qubit `q`.
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        let mut p = PauliString::identity(n);
        p.set(q, letter);
        p
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn letter(&self, q: usize) -> Letter {
        assert!(q < self.n(), "qubit {q} out of range");
        Letter::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn set(&mut self, q: usize, letter: Letter) {
        assert!(q < self.n(), "qubit {q} out of range");
        let (x, z) = letter.bits();
        self.x = (self.x & !(1 << q)) | ((x as u64) << q);
        self.z = (self.z & !(1 << q)) | ((z as u64) << q);
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.n()).map(move |q| self.letter(q))
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    /// Number of `Y` letters; fixes the phase of the matrix action.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// First qubit carrying a non-identity letter.
    pub fn first_site(&self) -> Option<usize> {
        let s = self.support_mask();
        (s != 0).then(|| s.trailing_zeros() as usize)
    }

    /// Parity of the symplectic inner product; `true` means the strings anticommute.
    pub(crate) fn anticommutes_unchecked(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) & 1 == 1
    }

    /// Product with phase, without the dimension check.
    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> (PauliPhase, PauliString) {
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let y1 = x1 & z1;
        let xo = x1 & !z1;
        let zo = !x1 & z1;
        // Per-site exponent of i, following the X^x Z^z decomposition with Y = iXZ.
        let plus = (y1 & z2 & !x2).count_ones() + (xo & z2 & x2).count_ones() + (zo & x2 & !z2).count_ones();
        let minus = (y1 & x2 & !z2).count_ones() + (xo & z2 & !x2).count_ones() + (zo & x2 & z2).count_ones();
        let phase = PauliPhase::new((plus + 4 * 64 - minus) % 4);
        (phase, PauliString { n: self.n, x: x1 ^ x2, z: z1 ^ z2 })
    }

    /// Dense column action: `P|c> = phase(c) |c ^ x>`.
    #[inline]
    pub(crate) fn column_phase(&self, c: usize, y_phase: Complex64) -> Complex64 {
        if (c as u64 & self.z).count_ones() & 1 == 1 {
            -y_phase
        } else {
            y_phase
        }
    }

    pub(crate) fn y_phase(&self) -> Complex64 {
        PauliPhase::new(self.y_count()).to_complex()
    }
}

/// `p · q = phase · r`.
pub fn pauli_mul(p: &PauliString, q: &PauliString) -> Result<(PauliPhase, PauliString)> {
    check_dim(p.n(), q.n())?;
    Ok(p.mul_unchecked(q))
}

pub fn commutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    check_dim(p.n(), q.n())?;
    Ok(!p.anticommutes_unchecked(q))
}

impl Ord for PauliString {
    /// Lexicographic on the letter string (I < X < Y < Z), qubit 0 first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            let diff = (self.x ^ other.x) | (self.z ^ other.z);
            if diff == 0 {
                return Ordering::Equal;
            }
            let q = diff.trailing_zeros() as usize;
            self.letter(q).cmp(&other.letter(q))
        })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.letters().map(Letter::as_char).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| Error::Format(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() || letters.len() > MAX_QUBITS {
            return Err(Error::Format(format!("Pauli string {s:?} must have 1..={MAX_QUBITS} letters")));
        }
        Ok(PauliString::from_letters(&letters))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Uniform sampler over the commutant of a non-identity target.
#[derive(Clone, Debug)]
pub struct CommutantSampler {
    target: PauliString,
    // Coordinate toggled when a raw draw anticommutes with the target.
    fix_x: u64,
    fix_z: u64,
}

impl CommutantSampler {
    pub fn new(target: PauliString) -> Result<Self> {
        let q =
            target.first_site().ok_or_else(|| Error::InvalidTarget("the identity has no proper commutant".into()))?;
        // Flipping z_q changes the symplectic product by target.x_q, flipping x_q by target.z_q.
        let (fix_x, fix_z) = if target.x >> q & 1 == 1 { (0, 1 << q) } else { (1 << q, 0) };
        Ok(CommutantSampler { target, fix_x, fix_z })
    }

    pub fn target(&self) -> &PauliString {
        &self.target
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    /// The toggle is a bijection between the two cosets, so the result is uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliString {
        let m = mask(self.n());
        let mut q = PauliString { n: self.target.n, x: rng.gen::<u64>() & m, z: rng.gen::<u64>() & m };
        if q.anticommutes_unchecked(&self.target) {
            q.x ^= self.fix_x;
            q.z ^= self.fix_z;
        }
        q
    }
}

pub fn sample_commutant<R: Rng + ?Sized>(sampler: &CommutantSampler, rng: &mut R) -> PauliString {
    sampler.sample(rng)
}

/// Decode Bell-measurement bits, one `(system, ancilla)` pair per qubit.
pub fn bell_outcome_to_pauli(bits: &[u8]) -> Result<PauliString> {
    if bits.len() % 2 == 1 {
        return Err(Error::Format(format!("Bell outcome has odd length {}", bits.len())));
    }
    let n = bits.len() / 2;
    if n > MAX_QUBITS {
        return Err(Error::TooLarge { what: "Bell outcome", n, limit: MAX_QUBITS });
    }
    let mut p = PauliString::identity(n);
    for (q, pair) in bits.chunks_exact(2).enumerate() {
        if pair.iter().any(|&b| b > 1) {
            return Err(Error::Format("Bell outcome bits must be 0 or 1".into()));
        }
        p.x |= (pair[0] as u64) << q;
        p.z |= (pair[1] as u64) << q;
    }
    Ok(p)
}

/// Inverse of [`bell_outcome_to_pauli`].
pub fn pauli_to_bell_outcome(p: &PauliString) -> Vec<u8> {
    (0..p.n()).flat_map(|q| [(p.x >> q & 1) as u8, (p.z >> q & 1) as u8]).collect()
}

/// All `4^n` strings in index order (`x` in the low half of the index).
pub fn all_paulis(n: usize) -> impl Iterator<Item = PauliString> {
    assert!(n <= 16, "enumeration is limited to 16 qubits");
    (0u64..1 << (2 * n)).map(move |i| PauliString { n: n as u8, x: i & mask(n), z: i >> n })
}

//! Ultrametric geometry of a local field with residue cardinality `q`.
//!
//! Points are never materialised as field elements. A ball of radius `q^l`
//! inside the ambient ball of radius `q^A` is addressed by the path of
//! `A - l` residue digits leading to it from the ambient root, and every
//! quantity the lattice layer needs depends only on pairwise distances,
//! which are read off the longest common digit prefix.
//!
//! Translations use carry-free digit arithmetic: each digit is an element
//! of the residue field `F_q = (Z/p)^n` and differences are taken
//! componentwise. This is the additive group of `F_q((t))`, whose balls,
//! cosets and distances are those of any local field with the same `q`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance between two cells, `‖x_a - x_b‖ = q^d`, or `Same` for a cell
/// and itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distance {
    Same,
    Exp(i32),
}

impl Distance {
    pub fn exponent(self) -> Option<i32> {
        match self {
            Distance::Same => None,
            Distance::Exp(d) => Some(d),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Same => write!(f, "same"),
            Distance::Exp(d) => write!(f, "{d}"),
        }
    }
}

/// A ball of radius `q^level` reached from the ambient ball (radius
/// `q^ambient_level`) by a path of residue digits, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BallAddress {
    ambient_level: i32,
    level: i32,
    digits: Vec<u32>,
}

impl BallAddress {
    pub fn new(q: u32, ambient_level: i32, level: i32, digits: Vec<u32>) -> Result<Self> {
        if level > ambient_level {
            return Err(Error::Argument(format!(
                "ball level {level} exceeds ambient level {ambient_level}"
            )));
        }
        let expected = (ambient_level - level) as usize;
        if digits.len() != expected {
            return Err(Error::Structure(format!(
                "address at level {level} below ambient {ambient_level} needs {expected} digits, got {}",
                digits.len()
            )));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= q) {
            return Err(Error::Argument(format!("digit {d} out of range for q = {q}")));
        }
        Ok(Self {
            ambient_level,
            level,
            digits,
        })
    }

    /// The ambient ball itself.
    pub fn root(ambient_level: i32) -> Self {
        Self {
            ambient_level,
            level: ambient_level,
            digits: Vec::new(),
        }
    }

    pub fn ambient_level(&self) -> i32 {
        self.ambient_level
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Haar measure of the ball, `q^level`.
    pub fn measure(&self, q: u32) -> f64 {
        f64::from(q).powi(self.level)
    }

    /// True when `other` lies inside this ball (a ball contains itself).
    pub fn contains(&self, other: &BallAddress) -> bool {
        self.ambient_level == other.ambient_level && other.level <= self.level && other.digits.starts_with(&self.digits)
    }

    /// Ancestor of this ball at a coarser `level`.
    pub fn ancestor(&self, level: i32) -> Result<BallAddress> {
        if level < self.level || level > self.ambient_level {
            return Err(Error::Argument(format!(
                "level {level} is not between {} and {}",
                self.level, self.ambient_level
            )));
        }
        let keep = (self.ambient_level - level) as usize;
        Ok(Self {
            ambient_level: self.ambient_level,
            level,
            digits: self.digits[..keep].to_vec(),
        })
    }

    /// All `q^(level - l)` sub-balls of radius `q^l`, in lexicographic digit order.
    pub fn descendants(&self, q: u32, l: i32) -> Result<Vec<BallAddress>> {
        if l > self.level {
            return Err(Error::Argument(format!(
                "refinement level {l} is coarser than ball level {}",
                self.level
            )));
        }
        let extra = (self.level - l) as u32;
        let count = (q as usize)
            .checked_pow(extra)
            .ok_or_else(|| Error::Argument(format!("q^{extra} overflows")))?;
        let mut out = Vec::with_capacity(count);
        let mut suffix = vec![0u32; extra as usize];
        for _ in 0..count {
            let mut digits = self.digits.clone();
            digits.extend_from_slice(&suffix);
            out.push(Self {
                ambient_level: self.ambient_level,
                level: l,
                digits,
            });
            // odometer increment, least significant digit last
            for pos in (0..suffix.len()).rev() {
                suffix[pos] += 1;
                if suffix[pos] < q {
                    break;
                }
                suffix[pos] = 0;
            }
        }
        Ok(out)
    }
}

/// Ultrametric distance between the centers of two balls of equal level.
///
/// Returns `Exp(d)` with `d = ambient_level - common_prefix_len`, or `Same`
/// when the addresses coincide.
pub fn distance(a: &BallAddress, b: &BallAddress) -> Result<Distance> {
    if a.ambient_level != b.ambient_level || a.level != b.level {
        return Err(Error::Structure(format!(
            "cannot compare balls (ambient {}, level {}) and (ambient {}, level {})",
            a.ambient_level, a.level, b.ambient_level, b.level
        )));
    }
    let common = a.digits.iter().zip(&b.digits).take_while(|(x, y)| x == y).count();
    if common == a.digits.len() {
        Ok(Distance::Same)
    } else {
        Ok(Distance::Exp(a.ambient_level - common as i32))
    }
}

/// Smallest prime factor of `q`, i.e. the residue characteristic.
pub fn residue_characteristic(q: u32) -> u32 {
    (2..=q).find(|d| q.is_multiple_of(*d)).unwrap_or(q)
}

/// Difference of two residue digits in `F_q = (Z/p)^n`, componentwise mod `p`.
pub fn digit_sub(a: u32, b: u32, q: u32) -> u32 {
    let p = residue_characteristic(q);
    let (mut a, mut b) = (a, b);
    let mut out = 0;
    let mut place = 1;
    while place < q {
        let (da, db) = (a % p, b % p);
        out += ((da + p - db) % p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    out
}

/// Coset difference `a - b` of two level-`l` cells (both read as
/// representatives modulo the ball of radius `q^l`).
pub fn address_sub(a: &BallAddress, b: &BallAddress, q: u32) -> Result<BallAddress> {
    if a.ambient_level != b.ambient_level || a.level != b.level {
        return Err(Error::Structure("address difference needs equal levels".into()));
    }
    let digits = a
        .digits
        .iter()
        .zip(&b.digits)
        .map(|(&x, &y)| digit_sub(x, y, q))
        .collect();
    Ok(BallAddress {
        ambient_level: a.ambient_level,
        level: a.level,
        digits,
    })
}

/// A finite union of disjoint balls of common radius `q^ball_level`,
/// kept in sorted address order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    q: u32,
    ambient_level: i32,
    ball_level: i32,
    balls: Vec<BallAddress>,
}

impl Region {
    pub fn new(q: u32, ambient_level: i32, ball_level: i32, balls: Vec<Vec<u32>>) -> Result<Self> {
        if q < 2 {
            return Err(Error::Argument(format!(
                "residue cardinality q = {q} must be at least 2"
            )));
        }
        if balls.is_empty() {
            return Err(Error::Argument("region must contain at least one ball".into()));
        }
        let mut addrs = balls
            .into_iter()
            .map(|d| BallAddress::new(q, ambient_level, ball_level, d))
            .collect::<Result<Vec<_>>>()?;
        addrs.sort();
        if let Some(w) = addrs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!(
                "duplicate ball {} in region",
                encode_digits(w[0].digits(), q)
            )));
        }
        Ok(Self {
            q,
            ambient_level,
            ball_level,
            balls: addrs,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn ambient_level(&self) -> i32 {
        self.ambient_level
    }

    pub fn ball_level(&self) -> i32 {
        self.ball_level
    }

    pub fn balls(&self) -> &[BallAddress] {
        &self.balls
    }

    pub fn ball_count(&self) -> usize {
        self.balls.len()
    }

    /// Whether every ball of `self` is a ball of `outer`.
    pub fn is_subregion_of(&self, outer: &Region) -> bool {
        self.q == outer.q
            && self.ambient_level == outer.ambient_level
            && self.ball_level == outer.ball_level
            && self.balls.iter().all(|b| outer.balls.binary_search(b).is_ok())
    }

    /// Region made of a subset of this region's balls.
    pub fn subregion(&self, keep: &[usize]) -> Result<Region> {
        let balls = keep
            .iter()
            .map(|&i| {
                self.balls
                    .get(i)
                    .map(|b| b.digits.clone())
                    .ok_or_else(|| Error::Argument(format!("ball index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Region::new(self.q, self.ambient_level, self.ball_level, balls)
    }

    /// Decompose into the `ν · q^(k-l)` cells of radius `q^l`.
    pub fn refine(&self, l: i32) -> Result<LatticeSpec> {
        if l > self.ball_level {
            return Err(Error::Argument(format!(
                "cell level {l} must not exceed ball level {}",
                self.ball_level
            )));
        }
        let mut cells = Vec::new();
        let mut owner = Vec::new();
        for (bi, ball) in self.balls.iter().enumerate() {
            let kids = ball.descendants(self.q, l)?;
            owner.extend(std::iter::repeat_n(bi, kids.len()));
            cells.extend(kids);
        }
        let index = cells.iter().enumerate().map(|(i, c)| (c.digits.clone(), i)).collect();
        Ok(LatticeSpec {
            region: self.clone(),
            cell_level: l,
            cells,
            owner,
            index,
        })
    }

    /// Compact text form `amb=<A>;k=<K>;balls=<d1>,<d2>,...`.
    pub fn to_text(&self) -> String {
        let balls: Vec<String> = self.balls.iter().map(|b| encode_digits(&b.digits, self.q)).collect();
        format!(
            "amb={};k={};balls={}",
            self.ambient_level,
            self.ball_level,
            balls.join(",")
        )
    }

    pub fn parse(text: &str, q: u32) -> Result<Region> {
        let mut amb = None;
        let mut k = None;
        let mut balls = None;
        for part in text.trim().split(';') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("malformed region field `{part}`")))?;
            match key.trim() {
                "amb" => amb = Some(parse_level(value)?),
                "k" => k = Some(parse_level(value)?),
                "balls" => {
                    balls = Some(
                        value
                            .split(',')
                            .map(|s| decode_digits(s.trim(), q))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                other => return Err(Error::Argument(format!("unknown region field `{other}`"))),
            }
        }
        match (amb, k, balls) {
            (Some(a), Some(k), Some(b)) => Region::new(q, a, k, b),
            _ => Err(Error::Argument("region text needs amb, k and balls".into())),
        }
    }
}

fn parse_level(s: &str) -> Result<i32> {
    s.trim()
        .parse()
        .map_err(|_| Error::Argument(format!("bad level `{s}`")))
}

/// Digit string, big-endian from the root. Base-36 characters when
/// `q <= 36`, otherwise `.`-separated decimal digits.
pub fn encode_digits(digits: &[u32], q: u32) -> String {
    if q <= 36 {
        digits
            .iter()
            .map(|&d| char::from_digit(d, 36).expect("digit below 36"))
            .collect()
    } else {
        digits.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
    }
}

pub fn decode_digits(s: &str, q: u32) -> Result<Vec<u32>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let digits: Vec<u32> = if q <= 36 {
        s.chars()
            .map(|c| {
                c.to_digit(36)
                    .ok_or_else(|| Error::Argument(format!("bad digit `{c}`")))
            })
            .collect::<Result<_>>()?
    } else {
        s.split('.')
            .map(|t| t.parse().map_err(|_| Error::Argument(format!("bad digit `{t}`"))))
            .collect::<Result<_>>()?
    };
    if let Some(d) = digits.iter().find(|&&d| d >= q) {
        return Err(Error::Argument(format!("digit {d} out of range for q = {q}")));
    }
    Ok(digits)
}

/// A region cut into cells of radius `q^cell_level`, indexed `0..η`.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    region: Region,
    cell_level: i32,
    cells: Vec<BallAddress>,
    owner: Vec<usize>,
    index: HashMap<Vec<u32>, usize>,
}

impl LatticeSpec {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn q(&self) -> u32 {
        self.region.q
    }

    pub fn cell_level(&self) -> i32 {
        self.cell_level
    }

    /// Number of cells η.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[BallAddress] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> Result<&BallAddress> {
        self.cells
            .get(i)
            .ok_or_else(|| Error::Argument(format!("cell index {i} out of range 0..{}", self.len())))
    }

    /// Index of the region ball containing cell `i`.
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn index_of(&self, cell: &BallAddress) -> Option<usize> {
        if cell.level != self.cell_level || cell.ambient_level != self.region.ambient_level {
            return None;
        }
        self.index.get(&cell.digits).copied()
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<Distance> {
        distance(self.cell(i)?, self.cell(j)?)
    }

    /// Index map from this lattice's cells into `outer`'s cells.
    pub fn embed_into(&self, outer: &LatticeSpec) -> Result<Vec<usize>> {
        if self.cell_level != outer.cell_level {
            return Err(Error::Structure("lattices have different cell levels".into()));
        }
        self.cells
            .iter()
            .map(|c| {
                outer.index_of(c).ok_or_else(|| {
                    Error::Argument(format!(
                        "cell {} is not part of the outer lattice",
                        encode_digits(c.digits(), self.q())
                    ))
                })
            })
            .collect()
    }

    /// The coset `x_i - x_j` as a level-`l` offset.
    pub fn center_difference(&self, i: usize, j: usize) -> Result<BallAddress> {
        address_sub(self.cell(i)?, self.cell(j)?, self.q())
    }
}

/// Whether translating cell `i` by `-y` stays inside the region, decided
/// through the complement set `R_i = { y : ‖y - (x_i - x_j)‖ > q^l for all j }`:
/// the answer is `true` exactly when `y ∉ R_i`.
///
/// `y` is an offset inside the ambient ball, resolved to the lattice scale
/// (any representative of the coset modulo the ball of radius `q^l`).
/// Offsets outside the ambient ball always belong to `R_i`.
pub fn complement_membership(lattice: &LatticeSpec, i: usize, y: &BallAddress) -> Result<bool> {
    lattice.cell(i)?;
    if y.level != lattice.cell_level || y.ambient_level != lattice.region.ambient_level {
        return Err(Error::Structure("offset must be resolved at the lattice scale".into()));
    }
    for j in 0..lattice.len() {
        let shift = lattice.center_difference(i, j)?;
        if distance(y, &shift)? == Distance::Same {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Direct point-wise route: the cell `x_i - y`, if it belongs to the lattice.
pub fn translate_cell(lattice: &LatticeSpec, i: usize, y: &BallAddress) -> Result<Option<usize>> {
    let moved = address_sub(lattice.cell(i)?, y, lattice.q())?;
    Ok(lattice.index_of(&moved))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(q: u32, amb: i32, level: i32, d: &[u32]) -> BallAddress {
        BallAddress::new(q, amb, level, d.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = addr(3, 2, 0, &[0, 1]);
        assert_eq!(distance(&a, &a).unwrap(), Distance::Same);
        assert_eq!(distance(&a, &addr(3, 2, 0, &[0, 2])).unwrap(), Distance::Exp(1));
        assert_eq!(distance(&a, &addr(3, 2, 0, &[1, 1])).unwrap(), Distance::Exp(2));
    }

    #[test]
    fn distance_rejects_mismatched_levels() {
        let a = addr(3, 2, 0, &[0, 1]);
        let b = addr(3, 2, 1, &[0]);
        assert!(matches!(distance(&a, &b), Err(Error::Structure(_))));
        let c = addr(3, 3, 0, &[0, 0, 1]);
        assert!(matches!(distance(&a, &c), Err(Error::Structure(_))));
    }

    #[test]
    fn address_validation() {
        assert!(BallAddress::new(3, 2, 0, vec![0, 3]).is_err());
        assert!(BallAddress::new(3, 2, 0, vec![0]).is_err());
        assert!(BallAddress::new(3, 0, 1, vec![]).is_err());
    }

    #[test]
    fn refine_single_ball_same_level() {
        let r = Region::new(3, 1, 0, vec![vec![2]]).unwrap();
        let lat = r.refine(0).unwrap();
        assert_eq!(lat.len(), 1);
        assert_eq!(lat.cell(0).unwrap(), &r.balls()[0]);
    }

    #[test]
    fn refine_one_ball_into_three() {
        let r = Region::new(3, 1, 1, vec![vec![]]).unwrap();
        let lat = r.refine(0).unwrap();
        assert_eq!(lat.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { Distance::Same } else { Distance::Exp(1) };
                assert_eq!(lat.distance(i, j).unwrap(), expect);
            }
        }
    }

    #[test]
    fn refine_two_far_balls() {
        // two level-0 balls at distance 9 inside an ambient ball of radius 9
        let r = Region::new(3, 2, 0, vec![vec![0, 0], vec![1, 0]]).unwrap();
        let lat = r.refine(-1).unwrap();
        assert_eq!(lat.len(), 6);
        for i in 0..6 {
            for j in 0..6 {
                if lat.owner(i) != lat.owner(j) {
                    assert_eq!(lat.distance(i, j).unwrap(), Distance::Exp(2));
                }
            }
        }
    }

    #[test]
    fn refine_rejects_coarser_level() {
        let r = Region::new(3, 1, 0, vec![vec![0]]).unwrap();
        assert!(matches!(r.refine(1), Err(Error::Argument(_))));
    }

    #[test]
    fn region_rejects_duplicates_and_empty() {
        assert!(Region::new(3, 1, 0, vec![vec![1], vec![1]]).is_err());
        assert!(Region::new(3, 1, 0, vec![]).is_err());
    }

    #[test]
    fn region_text_round_trip() {
        let r = Region::new(5, 2, 0, vec![vec![4, 1], vec![0, 3]]).unwrap();
        let text = r.to_text();
        assert_eq!(text, "amb=2;k=0;balls=03,41");
        assert_eq!(Region::parse(&text, 5).unwrap(), r);

        let big = Region::new(49, 1, 0, vec![vec![48], vec![7]]).unwrap();
        assert_eq!(Region::parse(&big.to_text(), 49).unwrap(), big);

        let whole = Region::new(3, 1, 1, vec![vec![]]).unwrap();
        assert_eq!(Region::parse(&whole.to_text(), 3).unwrap(), whole);
    }

    #[test]
    fn digit_arithmetic_is_f_q_subtraction() {
        // q = 9 = 3^2: digit 5 = (2, 1) in base 3, digit 7 = (1, 2)
        assert_eq!(digit_sub(5, 7, 9), 1 + 3 * 2);
        for a in 0..9 {
            assert_eq!(digit_sub(a, a, 9), 0);
            assert_eq!(digit_sub(a, 0, 9), a);
        }
        assert_eq!(digit_sub(1, 2, 5), 4);
    }

    #[test]
    fn complement_membership_examples() {
        let r = Region::new(3, 2, 0, vec![vec![0, 0], vec![0, 1], vec![2, 2]]).unwrap();
        let lat = r.refine(0).unwrap();
        let zero = addr(3, 2, 0, &[0, 0]);
        // staying in its own cell
        assert!(complement_membership(&lat, 1, &zero).unwrap());
        // offset equal to x_i - x_j lands in cell j
        for j in 0..lat.len() {
            let y = lat.center_difference(1, j).unwrap();
            assert!(complement_membership(&lat, 1, &y).unwrap());
            assert_eq!(translate_cell(&lat, 1, &y).unwrap(), Some(j));
        }
        // an offset that leaves the region
        let y = addr(3, 2, 0, &[1, 1]);
        assert!(!complement_membership(&lat, 1, &y).unwrap());
        assert_eq!(translate_cell(&lat, 1, &y).unwrap(), None);
    }
}

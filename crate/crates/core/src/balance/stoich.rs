//! Integer stoichiometry by exact rational nullspace, with a bounded
//! exhaustive fallback when the nullspace is not one-dimensional.

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::BalanceError;
use crate::molgraph::{Element, Molecule};

type Q = Ratio<i128>;

/// Largest coefficient tried by the exhaustive fallback.
pub const MAX_COEFFICIENT: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stoichiometry {
    pub reactants: Vec<u32>,
    pub products: Vec<u32>,
    /// Parallel to the auxiliary species list; zero means unused.
    pub aux: Vec<u32>,
}

impl Stoichiometry {
    pub fn all(&self) -> impl Iterator<Item = u32> + '_ {
        self.reactants.iter().chain(&self.products).chain(&self.aux).copied()
    }

    pub fn gcd(&self) -> u32 {
        self.all().fold(0, |g, c| g.gcd(&c))
    }
}

/// Rows are elements plus net charge; columns are species, signed so that a
/// balanced coefficient vector lies in the nullspace.
fn conservation_matrix(columns: &[(&Molecule, i128)]) -> Vec<Vec<i128>> {
    let mut elements: Vec<Element> = columns.iter().flat_map(|(m, _)| m.element_counts().elements().collect::<Vec<_>>()).collect();
    elements.sort();
    elements.dedup();
    let mut rows: Vec<Vec<i128>> = elements
        .iter()
        .map(|&e| columns.iter().map(|(m, sign)| sign * m.element_counts().get(e) as i128).collect())
        .collect();
    let charge: Vec<i128> = columns.iter().map(|(m, sign)| sign * m.net_charge() as i128).collect();
    if charge.iter().any(|&c| c != 0) {
        rows.push(charge);
    }
    rows
}

/// Basis of the right nullspace of `rows` (each row has `n` entries).
pub(crate) fn nullspace(rows: &[Vec<i128>], n: usize) -> Vec<Vec<Q>> {
    let mut m: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|&x| Q::from_integer(x)).collect()).collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..m.len()).find(|&r| m[r][col] != Q::from_integer(0)) else { continue };
        m.swap(row, p);
        let lead = m[row][col];
        for x in m[row].iter_mut() {
            *x /= lead;
        }
        for r in 0..m.len() {
            if r != row && m[r][col] != Q::from_integer(0) {
                let f = m[r][col];
                for c in 0..n {
                    let v = m[row][c];
                    m[r][c] -= f * v;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Q::from_integer(0); n];
            v[free] = Q::from_integer(1);
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][free];
            }
            v
        })
        .collect()
}

/// Smallest integer multiple of a rational vector, sign-normalized so the
/// first non-zero entry is positive.
fn integerize(v: &[Q]) -> Vec<i128> {
    let lcm = v.iter().fold(1i128, |l, x| l.lcm(x.denom()));
    let mut ints: Vec<i128> = v.iter().map(|x| (x * Q::from_integer(lcm)).to_integer()).collect();
    let g = ints.iter().fold(0i128, |g, x| g.gcd(x));
    if g > 1 {
        ints.iter_mut().for_each(|x| *x /= g);
    }
    if ints.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        ints.iter_mut().for_each(|x| *x = -*x);
    }
    ints
}

/// Minimal positive-integer coefficients conserving every element and net
/// charge: reactants and products get coefficients ≥ 1, auxiliary
/// (by-product) species ≥ 0 on the product side.
pub fn balance_stoichiometry(
    reactants: &[Molecule],
    products: &[Molecule],
    aux: &[Molecule],
) -> Result<Stoichiometry, BalanceError> {
    if reactants.is_empty() || products.is_empty() {
        return Err(BalanceError::EmptySide);
    }
    let columns: Vec<(&Molecule, i128)> = reactants
        .iter()
        .map(|m| (m, 1))
        .chain(products.iter().chain(aux).map(|m| (m, -1)))
        .collect();
    let n = columns.len();
    let required = reactants.len() + products.len();
    let rows = conservation_matrix(&columns);
    let basis = nullspace(&rows, n);
    if basis.is_empty() {
        return Err(BalanceError::Unbalanceable);
    }
    if basis.len() == 1 {
        let v = integerize(&basis[0]);
        let ok = v[..required].iter().all(|&x| x > 0) && v[required..].iter().all(|&x| x >= 0);
        if !ok {
            return Err(BalanceError::Unbalanceable);
        }
        return Ok(split(&v.iter().map(|&x| x as u32).collect::<Vec<_>>(), reactants.len(), products.len()));
    }
    exhaustive(&rows, n, required)
        .map(|v| split(&v, reactants.len(), products.len()))
        .ok_or(BalanceError::Unbalanceable)
}

fn split(v: &[u32], nr: usize, np: usize) -> Stoichiometry {
    Stoichiometry { reactants: v[..nr].to_vec(), products: v[nr..nr + np].to_vec(), aux: v[nr + np..].to_vec() }
}

/// Minimal-sum, then lexicographically smallest, coefficient vector within
/// [`MAX_COEFFICIENT`] with gcd 1. The last column is solved rather than
/// enumerated.
fn exhaustive(rows: &[Vec<i128>], n: usize, required: usize) -> Option<Vec<u32>> {
    let mut best: Option<(u32, Vec<u32>)> = None;
    let mut coeffs = vec![0u32; n];
    let mut residual = vec![0i128; rows.len()];
    fn rec(
        i: usize,
        rows: &[Vec<i128>],
        n: usize,
        required: usize,
        coeffs: &mut Vec<u32>,
        residual: &mut Vec<i128>,
        sum: u32,
        best: &mut Option<(u32, Vec<u32>)>,
    ) {
        if best.as_ref().is_some_and(|(s, _)| sum > *s) {
            return;
        }
        let lo = if i < required { 1 } else { 0 };
        if i == n - 1 {
            // residual + c * column == 0 for a single c in range
            let col: Vec<i128> = rows.iter().map(|r| r[i]).collect();
            let c = solve_last(residual, &col);
            if let Some(c) = c.filter(|&c| c >= lo as i128 && c <= MAX_COEFFICIENT as i128) {
                coeffs[i] = c as u32;
                let total = sum + c as u32;
                let g = coeffs.iter().fold(0u32, |g, x| g.gcd(x));
                if g == 1 {
                    let better = match best {
                        None => true,
                        Some((s, v)) => total < *s || (total == *s && coeffs.as_slice() < v.as_slice()),
                    };
                    if better {
                        *best = Some((total, coeffs.clone()));
                    }
                }
                coeffs[i] = 0;
            }
            return;
        }
        for c in lo..=MAX_COEFFICIENT {
            coeffs[i] = c;
            for (r, row) in rows.iter().enumerate() {
                residual[r] += c as i128 * row[i];
            }
            rec(i + 1, rows, n, required, coeffs, residual, sum + c, best);
            for (r, row) in rows.iter().enumerate() {
                residual[r] -= c as i128 * row[i];
            }
        }
        coeffs[i] = 0;
    }
    rec(0, rows, n, required, &mut coeffs, &mut residual, 0, &mut best);
    best.map(|(_, v)| v)
}

fn solve_last(residual: &[i128], col: &[i128]) -> Option<i128> {
    let mut c: Option<i128> = None;
    for (&r, &a) in residual.iter().zip(col) {
        if a == 0 {
            if r != 0 {
                return None;
            }
            continue;
        }
        if (-r) % a != 0 {
            return None;
        }
        let k = -r / a;
        if c.is_some_and(|x| x != k) {
            return None;
        }
        c = Some(k);
    }
    Some(c.unwrap_or(0))
}

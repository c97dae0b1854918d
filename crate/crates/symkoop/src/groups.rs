//! Finite groups, irreducible representations, matrix actions, projection
//! operators, and isotypic change-of-basis transforms.
//!
//! Groups are built from presentations with a fixed element ordering that is
//! part of the public contract (identity first; cyclic groups by powers of
//! the rotation, dihedral groups as `r^a k^b` with `a` fastest, direct
//! products with the first factor slowest). Downstream block layouts depend
//! on this ordering.
//!
//! Projection operators follow the unitary-irrep convention
//! `P^p_{mn} = (d_p/|Γ|) Σ_γ conj(R_p(γ)[m,n]) M(γ)` with actions composing
//! as homomorphisms, which yields the composition rule
//! `P^p_{nm} P^q_{kl} = δ_pq δ_mk P^p_{nl}` and makes the copy index `m`
//! label the commutant-invariant blocks.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, SVD, UPLO};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, C64};

const REP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("invalid group order: {0}")]
    InvalidOrder(String),
    #[error("expected {expected} generator matrices, got {got}")]
    GeneratorCount { expected: usize, got: usize },
    #[error("generator matrix {index} is not square of dimension {dim}")]
    GeneratorShape { index: usize, dim: usize },
    #[error(
        "inconsistent action: M({lhs})·M({rhs}) differs from M({product}) \
         by Frobenius norm {residual:.3e}"
    )]
    InconsistentAction {
        lhs: String,
        rhs: String,
        product: String,
        residual: f64,
    },
    #[error("irrep index {irrep} or matrix indices ({m},{n}) out of range")]
    IndexOutOfRange { irrep: usize, m: usize, n: usize },
    #[error("action belongs to a different group (order {action_order} vs {group_order})")]
    GroupMismatch {
        action_order: usize,
        group_order: usize,
    },
    #[error("action dimension {action_dim} does not match expected {expected}")]
    DimensionMismatch { action_dim: usize, expected: usize },
    #[error("isotypic transform is singular (σ_min/σ_max = {ratio:.3e})")]
    SingularTransform { ratio: f64 },
    #[error("invalid group document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// A unitary irreducible representation: one matrix per group element, in
/// element order, plus the character (trace) of each matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Irrep {
    pub name: String,
    pub dim: usize,
    pub matrices: Vec<Array2<C64>>,
    pub characters: Vec<C64>,
}

/// Abstract finite group with multiplication table, generators, and the full
/// irreducible-representation table.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    /// Row-major |Γ|×|Γ| table: `mul[i*order + j] = id of γ_i γ_j`.
    mul: Vec<usize>,
    inverses: Vec<usize>,
    identity: usize,
    generators: Vec<usize>,
    /// Generator-index word for each element (empty for the identity).
    words: Vec<Vec<usize>>,
    element_names: Vec<String>,
    irreps: Vec<Irrep>,
    conjugacy_classes: Vec<Vec<usize>>,
}

impl fmt::Display for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (order {})", self.name, self.order)
    }
}

impl FiniteGroup {
    /// Cyclic group `Z_n` presented by ⟨r | r^n = e⟩, elements ordered as
    /// powers of `r`. Each of the `n` one-dimensional irreps has
    /// `χ_k(r^m) = exp(2πi k m / n)`.
    pub fn cyclic(n: usize) -> Result<Arc<FiniteGroup>, GroupError> {
        if n == 0 {
            return Err(GroupError::InvalidOrder(
                "cyclic group order must be at least 1".into(),
            ));
        }
        let mut mul = vec![0usize; n * n];
        for i in 0..n {
            for j in 0..n {
                mul[i * n + j] = (i + j) % n;
            }
        }
        let inverses = (0..n).map(|i| (n - i) % n).collect();
        let element_names = (0..n)
            .map(|i| match i {
                0 => "e".to_string(),
                1 => "r".to_string(),
                _ => format!("r^{i}"),
            })
            .collect();
        let generators = if n == 1 { vec![] } else { vec![1] };
        let words = (0..n)
            .map(|i| if n == 1 { vec![] } else { vec![0usize; i] })
            .collect();
        let tau = 2.0 * std::f64::consts::PI / n as f64;
        let irreps = (0..n)
            .map(|k| {
                let characters: Vec<C64> = (0..n)
                    .map(|m| C64::from_polar(1.0, tau * ((k * m) % n) as f64))
                    .collect();
                Irrep {
                    name: if k == 0 {
                        "tr".to_string()
                    } else {
                        format!("w{k}")
                    },
                    dim: 1,
                    matrices: characters
                        .iter()
                        .map(|&c| Array2::from_elem((1, 1), c))
                        .collect(),
                    characters,
                }
            })
            .collect();
        let group = FiniteGroup {
            name: format!("Z{n}"),
            order: n,
            mul,
            inverses,
            identity: 0,
            generators,
            words,
            element_names,
            irreps,
            conjugacy_classes: (0..n).map(|i| vec![i]).collect(),
        };
        group.validate()?;
        Ok(Arc::new(group))
    }

    /// Dihedral group `D_n` of order `2n` presented by
    /// ⟨r, κ | r^n = κ² = e, κrκ = r⁻¹⟩, elements ordered as
    /// `e, r, …, r^{n-1}, κ, rκ, …, r^{n-1}κ`. Requires `n ≥ 3`.
    pub fn dihedral(n: usize) -> Result<Arc<FiniteGroup>, GroupError> {
        if n < 3 {
            return Err(GroupError::InvalidOrder(format!(
                "dihedral group needs n >= 3, got {n}"
            )));
        }
        let order = 2 * n;
        let id = |a: usize, b: usize| b * n + a; // element r^a κ^b
        let mut mul = vec![0usize; order * order];
        for a1 in 0..n {
            for b1 in 0..2 {
                for a2 in 0..n {
                    for b2 in 0..2 {
                        // (r^a1 κ^b1)(r^a2 κ^b2) = r^(a1 ± a2) κ^(b1+b2):
                        // κ conjugates r to r^{-1} when passing it.
                        let a = if b1 == 0 {
                            (a1 + a2) % n
                        } else {
                            (a1 + n - a2) % n
                        };
                        let b = (b1 + b2) % 2;
                        mul[id(a1, b1) * order + id(a2, b2)] = id(a, b);
                    }
                }
            }
        }
        let mut inverses = vec![0usize; order];
        for a in 0..n {
            inverses[id(a, 0)] = id((n - a) % n, 0);
            inverses[id(a, 1)] = id(a, 1); // reflections are involutions
        }
        let mut element_names = Vec::with_capacity(order);
        for b in 0..2 {
            for a in 0..n {
                let mut s = String::new();
                if a == 1 {
                    s.push('r');
                } else if a > 1 {
                    s.push_str(&format!("r^{a}"));
                }
                if b == 1 {
                    s.push('k');
                }
                if s.is_empty() {
                    s.push('e');
                }
                element_names.push(s);
            }
        }
        let generators = vec![id(1, 0), id(0, 1)];
        let mut words = Vec::with_capacity(order);
        for b in 0..2 {
            for a in 0..n {
                let mut w = vec![0usize; a];
                if b == 1 {
                    w.push(1);
                }
                words.push(w);
            }
        }

        let tau = 2.0 * std::f64::consts::PI / n as f64;
        let mut irreps = Vec::new();
        let one = C64::new(1.0, 0.0);
        // trivial and sign (reflection-parity) representations
        irreps.push(Irrep {
            name: "tr".into(),
            dim: 1,
            matrices: vec![Array2::from_elem((1, 1), one); order],
            characters: vec![one; order],
        });
        let sign_chars: Vec<C64> = (0..order)
            .map(|i| if i < n { one } else { -one })
            .collect();
        irreps.push(Irrep {
            name: "sign".into(),
            dim: 1,
            matrices: sign_chars
                .iter()
                .map(|&c| Array2::from_elem((1, 1), c))
                .collect(),
            characters: sign_chars,
        });
        if n % 2 == 0 {
            // two further one-dimensional irreps exist for even n
            for (nm, refl_sign) in [("alt", 1.0), ("alt'", -1.0)] {
                let chars: Vec<C64> = (0..order)
                    .map(|i| {
                        let (a, b) = (i % n, i / n);
                        let s = if a % 2 == 0 { 1.0 } else { -1.0 };
                        let t = if b == 1 { refl_sign } else { 1.0 };
                        C64::new(s * t, 0.0)
                    })
                    .collect();
                irreps.push(Irrep {
                    name: nm.into(),
                    dim: 1,
                    matrices: chars
                        .iter()
                        .map(|&c| Array2::from_elem((1, 1), c))
                        .collect(),
                    characters: chars,
                });
            }
        }
        // two-dimensional irreps R_h(r) = diag(ω^h, ω^{-h}), R_h(κ) = [[0,1],[1,0]]
        let two_dim_count = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
        for h in 1..=two_dim_count {
            let zero = C64::new(0.0, 0.0);
            let swap = array![[zero, one], [one, zero]];
            let matrices: Vec<Array2<C64>> = (0..order)
                .map(|i| {
                    let (a, b) = (i % n, i / n);
                    let wa = C64::from_polar(1.0, tau * ((h * a) % n) as f64);
                    let rot = array![[wa, zero], [zero, wa.conj()]];
                    if b == 0 {
                        rot
                    } else {
                        rot.dot(&swap)
                    }
                })
                .collect();
            let characters = matrices.iter().map(|m| m[(0, 0)] + m[(1, 1)]).collect();
            irreps.push(Irrep {
                name: if two_dim_count == 1 {
                    "st".to_string()
                } else {
                    format!("st{h}")
                },
                dim: 2,
                matrices,
                characters,
            });
        }

        let mut group = FiniteGroup {
            name: format!("D{n}"),
            order,
            mul,
            inverses,
            identity: 0,
            generators,
            words,
            element_names,
            irreps,
            conjugacy_classes: Vec::new(),
        };
        group.conjugacy_classes = group.compute_conjugacy_classes();
        group.validate()?;
        Ok(Arc::new(group))
    }

    /// Direct product `g1 ⊗ g2`. Elements are pairs `(γ1, γ2)` with the
    /// first factor slowest: pair `(i, j)` gets id `i·|g2| + j`. Irreps are
    /// tensor products of the factor irreps; characters multiply.
    pub fn direct_product(
        g1: &FiniteGroup,
        g2: &FiniteGroup,
    ) -> Result<Arc<FiniteGroup>, GroupError> {
        let (n1, n2) = (g1.order, g2.order);
        let order = n1 * n2;
        let id = |i: usize, j: usize| i * n2 + j;
        let mut mul = vec![0usize; order * order];
        for i1 in 0..n1 {
            for j1 in 0..n2 {
                for i2 in 0..n1 {
                    for j2 in 0..n2 {
                        mul[id(i1, j1) * order + id(i2, j2)] = id(g1.mul(i1, i2), g2.mul(j1, j2));
                    }
                }
            }
        }
        let inverses = (0..order)
            .map(|k| id(g1.inverses[k / n2], g2.inverses[k % n2]))
            .collect();
        let element_names = (0..order)
            .map(|k| {
                format!(
                    "({},{})",
                    g1.element_names[k / n2],
                    g2.element_names[k % n2]
                )
            })
            .collect();
        // generators of g1 embedded as (gen, e), then g2's as (e, gen)
        let mut generators: Vec<usize> = g1.generators.iter().map(|&g| id(g, 0)).collect();
        generators.extend(g2.generators.iter().map(|&g| id(0, g)));
        let g1_gen_count = g1.generators.len();
        let words = (0..order)
            .map(|k| {
                let mut w = g1.words[k / n2].clone();
                w.extend(g2.words[k % n2].iter().map(|&gi| gi + g1_gen_count));
                w
            })
            .collect();
        let mut irreps = Vec::with_capacity(g1.irreps.len() * g2.irreps.len());
        for p1 in &g1.irreps {
            for p2 in &g2.irreps {
                let matrices: Vec<Array2<C64>> = (0..order)
                    .map(|k| linalg::kron_c(&p1.matrices[k / n2], &p2.matrices[k % n2]))
                    .collect();
                let characters = (0..order)
                    .map(|k| p1.characters[k / n2] * p2.characters[k % n2])
                    .collect();
                irreps.push(Irrep {
                    name: format!("{}*{}", p1.name, p2.name),
                    dim: p1.dim * p2.dim,
                    matrices,
                    characters,
                });
            }
        }
        let mut group = FiniteGroup {
            name: format!("{}x{}", g1.name, g2.name),
            order,
            mul,
            inverses,
            identity: 0,
            generators,
            words,
            element_names,
            irreps,
            conjugacy_classes: Vec::new(),
        };
        group.conjugacy_classes = group.compute_conjugacy_classes();
        group.validate()?;
        Ok(Arc::new(group))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity_id(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn word(&self, elem: usize) -> &[usize] {
        &self.words[elem]
    }

    pub fn element_name(&self, elem: usize) -> &str {
        &self.element_names[elem]
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn conjugacy_classes(&self) -> &[Vec<usize>] {
        &self.conjugacy_classes
    }

    fn compute_conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for a in 0..self.order {
            if seen[a] {
                continue;
            }
            let mut class = Vec::new();
            for g in 0..self.order {
                let c = self.mul(self.mul(g, a), self.inverses[g]);
                if !seen[c] {
                    seen[c] = true;
                    class.push(c);
                }
            }
            class.sort_unstable();
            classes.push(class);
        }
        classes
    }

    /// Structural sanity checks: identity, inverses, generator closure, and
    /// Σ d_p² = |Γ|.
    fn validate(&self) -> Result<(), GroupError> {
        let n = self.order;
        for i in 0..n {
            if self.mul(self.identity, i) != i || self.mul(i, self.identity) != i {
                return Err(GroupError::InvalidOrder("identity axiom violated".into()));
            }
            if self.mul(i, self.inverses[i]) != self.identity {
                return Err(GroupError::InvalidOrder("inverse axiom violated".into()));
            }
        }
        for (elem, word) in self.words.iter().enumerate() {
            let mut acc = self.identity;
            for &gi in word {
                acc = self.mul(acc, self.generators[gi]);
            }
            if acc != elem {
                return Err(GroupError::InvalidOrder(format!(
                    "generator word for element {elem} does not reproduce it"
                )));
            }
        }
        let dim_sq: usize = self.irreps.iter().map(|p| p.dim * p.dim).sum();
        if dim_sq != n {
            return Err(GroupError::InvalidOrder(format!(
                "sum of squared irrep dimensions {dim_sq} != group order {n}"
            )));
        }
        Ok(())
    }

    /// Serializable document form; see [`GroupDocument`].
    pub fn to_document(&self, action: Option<&GroupAction>) -> GroupDocument {
        GroupDocument {
            order: self.order,
            name: self.name.clone(),
            mul_table: (0..self.order)
                .map(|i| self.mul[i * self.order..(i + 1) * self.order].to_vec())
                .collect(),
            generators: self.generators.clone(),
            irreps: self
                .irreps
                .iter()
                .map(|p| IrrepDocument {
                    name: p.name.clone(),
                    dim: p.dim,
                    characters: p.characters.iter().map(|c| [c.re, c.im]).collect(),
                    matrices: p
                        .matrices
                        .iter()
                        .map(|m| {
                            m.rows()
                                .into_iter()
                                .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
            action_matrices: action.map(|a| {
                a.matrices
                    .iter()
                    .map(|m| m.rows().into_iter().map(|row| row.to_vec()).collect())
                    .collect()
            }),
        }
    }

    /// Rebuild a group from its document form, re-validating the axioms.
    pub fn from_document(doc: &GroupDocument) -> Result<Arc<FiniteGroup>, GroupError> {
        let n = doc.order;
        if n == 0 || doc.mul_table.len() != n {
            return Err(GroupError::InvalidDocument(
                "order and multiplication table size disagree".into(),
            ));
        }
        let mut mul = vec![0usize; n * n];
        for (i, row) in doc.mul_table.iter().enumerate() {
            if row.len() != n {
                return Err(GroupError::InvalidDocument(format!(
                    "multiplication table row {i} has wrong length"
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v >= n {
                    return Err(GroupError::InvalidDocument(format!(
                        "table entry ({i},{j}) out of range"
                    )));
                }
                mul[i * n + j] = v;
            }
        }
        // element 0 must be the two-sided identity per the ordering contract
        for i in 0..n {
            if mul[i] != i || mul[i * n] != i {
                return Err(GroupError::InvalidDocument(
                    "element 0 is not a two-sided identity".into(),
                ));
            }
        }
        let mut inverses = vec![usize::MAX; n];
        for i in 0..n {
            for j in 0..n {
                if mul[i * n + j] == 0 {
                    inverses[i] = j;
                }
            }
            if inverses[i] == usize::MAX {
                return Err(GroupError::InvalidDocument(format!(
                    "element {i} has no inverse"
                )));
            }
        }
        // breadth-first generator words
        let mut words: Vec<Option<Vec<usize>>> = vec![None; n];
        words[0] = Some(vec![]);
        let mut frontier = std::collections::VecDeque::from([0usize]);
        while let Some(elem) = frontier.pop_front() {
            let base = words[elem].clone().expect("visited");
            for (gi, &g) in doc.generators.iter().enumerate() {
                let next = mul[elem * n + g];
                if words[next].is_none() {
                    let mut w = base.clone();
                    w.push(gi);
                    words[next] = Some(w);
                    frontier.push_back(next);
                }
            }
        }
        let words: Vec<Vec<usize>> = words
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.ok_or_else(|| {
                    GroupError::InvalidDocument(format!("generators do not generate element {i}"))
                })
            })
            .collect::<Result<_, _>>()?;
        let irreps = doc
            .irreps
            .iter()
            .map(|p| Irrep {
                name: p.name.clone(),
                dim: p.dim,
                characters: p.characters.iter().map(|c| C64::new(c[0], c[1])).collect(),
                matrices: p
                    .matrices
                    .iter()
                    .map(|m| {
                        Array2::from_shape_fn((p.dim, p.dim), |(i, j)| {
                            C64::new(m[i][j][0], m[i][j][1])
                        })
                    })
                    .collect(),
            })
            .collect();
        let mut group = FiniteGroup {
            name: doc.name.clone(),
            order: n,
            mul,
            inverses,
            identity: 0,
            generators: doc.generators.clone(),
            words,
            element_names: (0..n).map(|i| format!("g{i}")).collect(),
            irreps,
            conjugacy_classes: Vec::new(),
        };
        group.conjugacy_classes = group.compute_conjugacy_classes();
        group.validate()?;
        Ok(Arc::new(group))
    }
}

/// JSON-serializable group (and optional action) document. Complex numbers
/// are `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupDocument {
    pub order: usize,
    pub name: String,
    pub mul_table: Vec<Vec<usize>>,
    pub generators: Vec<usize>,
    pub irreps: Vec<IrrepDocument>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_matrices: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrrepDocument {
    pub name: String,
    pub dim: usize,
    pub characters: Vec<[f64; 2]>,
    pub matrices: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Concrete matrix realization of a group on a vector space. Matrices
/// compose as a homomorphism: `M(γ₁γ₂) = M(γ₁)M(γ₂)`.
#[derive(Debug, Clone)]
pub struct GroupAction {
    group: Arc<FiniteGroup>,
    dim: usize,
    matrices: Vec<Array2<f64>>,
}

impl GroupAction {
    /// Compose generator matrices along each element's generator word, then
    /// verify the multiplication table to `1e-10` Frobenius.
    pub fn build(
        group: &Arc<FiniteGroup>,
        generator_matrices: &[Array2<f64>],
    ) -> Result<GroupAction, GroupError> {
        let gens = group.generators();
        if generator_matrices.len() != gens.len() {
            return Err(GroupError::GeneratorCount {
                expected: gens.len(),
                got: generator_matrices.len(),
            });
        }
        let dim = if let Some(first) = generator_matrices.first() {
            first.nrows()
        } else {
            1 // trivial group: dimension cannot be inferred
        };
        for (i, m) in generator_matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(GroupError::GeneratorShape { index: i, dim });
            }
        }
        let mut matrices = Vec::with_capacity(group.order());
        for elem in 0..group.order() {
            let mut acc = Array2::<f64>::eye(dim);
            for &gi in group.word(elem) {
                acc = acc.dot(&generator_matrices[gi]);
            }
            matrices.push(acc);
        }
        let action = GroupAction {
            group: Arc::clone(group),
            dim,
            matrices,
        };
        action.verify_representation()?;
        Ok(action)
    }

    /// Regular (Cayley) permutation representation from left multiplication:
    /// `M(γ) e_j = e_{γ γ_j}`, one |Γ|×|Γ| permutation matrix per element.
    pub fn cayley(group: &Arc<FiniteGroup>) -> GroupAction {
        let n = group.order();
        let matrices = (0..n)
            .map(|g| {
                let mut m = Array2::<f64>::zeros((n, n));
                for j in 0..n {
                    m[(group.mul(g, j), j)] = 1.0;
                }
                m
            })
            .collect();
        GroupAction {
            group: Arc::clone(group),
            dim: n,
            matrices,
        }
    }

    /// The trivial action: every element acts as the identity.
    pub fn trivial(group: &Arc<FiniteGroup>, dim: usize) -> GroupAction {
        GroupAction {
            group: Arc::clone(group),
            dim,
            matrices: vec![Array2::eye(dim); group.order()],
        }
    }

    /// Construct from explicit per-element matrices, verifying the
    /// representation property.
    pub fn from_matrices(
        group: &Arc<FiniteGroup>,
        matrices: Vec<Array2<f64>>,
    ) -> Result<GroupAction, GroupError> {
        if matrices.len() != group.order() {
            return Err(GroupError::GeneratorCount {
                expected: group.order(),
                got: matrices.len(),
            });
        }
        let dim = matrices[0].nrows();
        let action = GroupAction {
            group: Arc::clone(group),
            dim,
            matrices,
        };
        action.verify_representation()?;
        Ok(action)
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, elem: usize) -> &Array2<f64> {
        &self.matrices[elem]
    }

    pub fn matrices(&self) -> &[Array2<f64>] {
        &self.matrices
    }

    /// Check `M(γ_i)M(γ_j) = M(γ_i γ_j)` for every generator against every
    /// element, which by induction covers the full table.
    pub(crate) fn verify_representation(&self) -> Result<(), GroupError> {
        let g = &self.group;
        let id = Array2::<f64>::eye(self.dim);
        let rid = frob_f64(&(&self.matrices[g.identity_id()] - &id));
        if rid > REP_TOL {
            return Err(GroupError::InconsistentAction {
                lhs: "e".into(),
                rhs: "e".into(),
                product: "e".into(),
                residual: rid,
            });
        }
        for &gen in g.generators() {
            for j in 0..g.order() {
                let prod = g.mul(gen, j);
                let lhs = self.matrices[gen].dot(&self.matrices[j]);
                let resid = frob_f64(&(&lhs - &self.matrices[prod]));
                if resid > REP_TOL {
                    return Err(GroupError::InconsistentAction {
                        lhs: g.element_name(gen).to_string(),
                        rhs: g.element_name(j).to_string(),
                        product: g.element_name(prod).to_string(),
                        residual: resid,
                    });
                }
            }
        }
        Ok(())
    }

    /// True when every matrix is a 0/1 permutation matrix.
    pub fn is_permutation(&self) -> bool {
        self.matrices.iter().all(is_permutation_matrix)
    }

    /// For a permutation action, the image index of `j` under `elem`: the
    /// row holding the 1 in column `j`.
    pub fn permutation_image(&self, elem: usize, j: usize) -> usize {
        self.matrices[elem]
            .column(j)
            .iter()
            .position(|&x| (x - 1.0).abs() < 1e-9)
            .expect("permutation column has a unit entry")
    }

    /// Max residual of `M(γ₁)M(γ₂) − M(γ₁γ₂)` over all pairs (diagnostic).
    pub fn representation_residual(&self) -> f64 {
        let g = &self.group;
        let mut worst = 0.0_f64;
        for i in 0..g.order() {
            for j in 0..g.order() {
                let lhs = self.matrices[i].dot(&self.matrices[j]);
                let r = frob_f64(&(&lhs - &self.matrices[g.mul(i, j)]));
                worst = worst.max(r);
            }
        }
        worst
    }
}

fn frob_f64(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn is_permutation_matrix(m: &Array2<f64>) -> bool {
    let (r, c) = m.dim();
    if r != c {
        return false;
    }
    for row in m.rows() {
        let mut ones = 0;
        for &x in row {
            if (x - 1.0).abs() < 1e-12 {
                ones += 1;
            } else if x.abs() > 1e-12 {
                return false;
            }
        }
        if ones != 1 {
            return false;
        }
    }
    for col in m.columns() {
        let ones = col.iter().filter(|&&x| (x - 1.0).abs() < 1e-12).count();
        if ones != 1 {
            return false;
        }
    }
    true
}

/// Projection operator `P^p_{mn} = (d_p/|Γ|) Σ_γ conj(R_p(γ)[m,n]) M(γ)`
/// realized on the space the action lives on. Indices are 0-based.
pub fn projector(
    group: &FiniteGroup,
    action: &GroupAction,
    p: usize,
    m: usize,
    n: usize,
) -> Result<Array2<C64>, GroupError> {
    check_action_group(group, action)?;
    let irrep = group
        .irreps()
        .get(p)
        .ok_or(GroupError::IndexOutOfRange { irrep: p, m, n })?;
    if m >= irrep.dim || n >= irrep.dim {
        return Err(GroupError::IndexOutOfRange { irrep: p, m, n });
    }
    let dim = action.dim();
    let mut out = Array2::<C64>::zeros((dim, dim));
    let scale = irrep.dim as f64 / group.order() as f64;
    for g in 0..group.order() {
        let coeff = irrep.matrices[g][(m, n)].conj() * scale;
        if coeff.norm() == 0.0 {
            continue;
        }
        out.zip_mut_with(&crate::linalg::to_complex(action.matrix(g)), |acc, &x| {
            *acc += coeff * x
        });
    }
    Ok(out)
}

/// Character projector `P^p = (d_p/|Γ|) Σ_γ conj(χ_p(γ)) M(γ)` onto the full
/// p-th isotypic component.
pub fn character_projector(
    group: &FiniteGroup,
    action: &GroupAction,
    p: usize,
) -> Result<Array2<C64>, GroupError> {
    check_action_group(group, action)?;
    let irrep = group.irreps().get(p).ok_or(GroupError::IndexOutOfRange {
        irrep: p,
        m: 0,
        n: 0,
    })?;
    let dim = action.dim();
    let mut out = Array2::<C64>::zeros((dim, dim));
    let scale = irrep.dim as f64 / group.order() as f64;
    for g in 0..group.order() {
        let coeff = irrep.characters[g].conj() * scale;
        out.zip_mut_with(&crate::linalg::to_complex(action.matrix(g)), |acc, &x| {
            *acc += coeff * x
        });
    }
    Ok(out)
}

fn check_action_group(group: &FiniteGroup, action: &GroupAction) -> Result<(), GroupError> {
    if action.group().order() != group.order() || action.group().mul != group.mul {
        return Err(GroupError::GroupMismatch {
            action_order: action.group().order(),
            group_order: group.order(),
        });
    }
    Ok(())
}

/// One contiguous block of a symmetry-adapted basis: all functions produced
/// by the `copy`-th projector row of irrep `irrep`. A size-0 block records
/// the warning that the dictionary misses this isotypic slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub irrep: usize,
    pub copy: usize,
    pub size: usize,
}

/// Change of basis `Ξ = T Ψ` grouping dictionary functions by (irrep, copy).
/// On symmetry-closed data the Koopman approximation becomes block diagonal
/// with exactly this layout, and the `d_p` copies of each irrep carry
/// identical blocks. The group action itself is block diagonal at the
/// coarser granularity of [`IsotypicTransform::component_ranges`].
#[derive(Debug, Clone)]
pub struct IsotypicTransform {
    pub matrix: Array2<C64>,
    pub block_layout: Vec<BlockSpec>,
    pub source_size: usize,
}

impl IsotypicTransform {
    /// Half-open row/column ranges of each block, in layout order.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.block_layout.len());
        let mut start = 0;
        for b in &self.block_layout {
            out.push(start..start + b.size);
            start += b.size;
        }
        out
    }

    /// Ranges of whole isotypic components (the copies of one irrep merged).
    /// Unlike the per-copy blocks these are invariant under the group action
    /// itself, not only under operators commuting with it.
    pub fn component_ranges(&self) -> Vec<(usize, Range<usize>)> {
        let mut out: Vec<(usize, Range<usize>)> = Vec::new();
        let mut start = 0;
        for b in &self.block_layout {
            let end = start + b.size;
            match out.last_mut() {
                Some((irrep, range)) if *irrep == b.irrep => range.end = end,
                _ => out.push((b.irrep, start..end)),
            }
            start = end;
        }
        out
    }

    pub fn inverse(&self) -> Result<Array2<C64>, GroupError> {
        Ok(linalg::inv(&self.matrix)?)
    }

    pub fn dim(&self) -> usize {
        self.block_layout.iter().map(|b| b.size).sum()
    }
}

/// Build the isotypic change of basis for a dictionary-index action.
///
/// For permutation actions the index set is decomposed into orbits; free
/// orbits get the explicit projector rows `conj(R_p(γ)[m,n])` on their slots
/// (the unnormalized rows of the regular representation), while stabilized
/// orbits and non-permutation representations fall back to orthonormal bases
/// of the projector ranges, aligned across copies by the transfer operators
/// `P^p_{m,0}`.
pub fn isotypic_transform(
    group: &FiniteGroup,
    dict_action: &GroupAction,
) -> Result<IsotypicTransform, GroupError> {
    check_action_group(group, dict_action)?;
    dict_action.verify_representation()?;
    let n = dict_action.dim();
    let order = group.order();

    // rows[p][m] collects this block's rows across orbits
    let mut rows: Vec<Vec<Vec<Array1<C64>>>> = group
        .irreps()
        .iter()
        .map(|p| vec![Vec::new(); p.dim])
        .collect();

    if dict_action.is_permutation() {
        for orbit in permutation_orbits(dict_action) {
            if orbit.len() == order {
                // free orbit: the slot of γ is the image of the representative
                let rep = orbit[0];
                let slot: Vec<usize> = (0..order)
                    .map(|g| dict_action.permutation_image(g, rep))
                    .collect();
                for (p, irrep) in group.irreps().iter().enumerate() {
                    for m in 0..irrep.dim {
                        for nn in 0..irrep.dim {
                            let mut row = Array1::<C64>::zeros(n);
                            for g in 0..order {
                                row[slot[g]] += irrep.matrices[g][(m, nn)].conj();
                            }
                            rows[p][m].push(row);
                        }
                    }
                }
            } else {
                let sub = restrict_action(dict_action, &orbit);
                append_projector_rows(group, &sub, &orbit, n, &mut rows)?;
            }
        }
    } else {
        let all: Vec<usize> = (0..n).collect();
        append_projector_rows(group, dict_action, &all, n, &mut rows)?;
    }

    let mut matrix = Array2::<C64>::zeros((n, n));
    let mut layout = Vec::new();
    let mut next = 0usize;
    for (p, irrep) in group.irreps().iter().enumerate() {
        for m in 0..irrep.dim {
            let block_rows = &rows[p][m];
            for r in block_rows {
                matrix.row_mut(next).assign(r);
                next += 1;
            }
            layout.push(BlockSpec {
                irrep: p,
                copy: m,
                size: block_rows.len(),
            });
        }
    }
    if next != n {
        return Err(GroupError::InvalidOrder(format!(
            "isotypic rows span {next} of {n} dimensions"
        )));
    }
    let (_, s, _) = matrix
        .svd(false, false)
        .map_err(|e| GroupError::Linalg(linalg::LinalgError::Svd(e.to_string())))?;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin / smax < 1e-10 {
        return Err(GroupError::SingularTransform {
            ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    Ok(IsotypicTransform {
        matrix,
        block_layout: layout,
        source_size: n,
    })
}

/// Orbits of the index set under a permutation action, each sorted and
/// ordered by smallest member.
pub fn permutation_orbits(action: &GroupAction) -> Vec<Vec<usize>> {
    let n = action.dim();
    let order = action.group().order();
    let mut seen = vec![false; n];
    let mut orbits = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut members = Vec::new();
        for g in 0..order {
            let img = action.permutation_image(g, start);
            if !seen[img] {
                seen[img] = true;
                members.push(img);
            }
        }
        members.sort_unstable();
        orbits.push(members);
    }
    orbits
}

fn restrict_action(action: &GroupAction, orbit: &[usize]) -> GroupAction {
    let s = orbit.len();
    let matrices = action
        .matrices()
        .iter()
        .map(|m| Array2::from_shape_fn((s, s), |(i, j)| m[(orbit[i], orbit[j])]))
        .collect();
    GroupAction {
        group: Arc::clone(action.group()),
        dim: s,
        matrices,
    }
}

/// General route: orthonormal basis of range(P^p_{00}) from its Hermitian
/// eigendecomposition (eigenvalues of an idempotent are 0/1), with copies
/// m > 0 aligned through the transfer operators P^p_{m,0}.
fn append_projector_rows(
    group: &FiniteGroup,
    sub_action: &GroupAction,
    embed: &[usize],
    full_dim: usize,
    rows: &mut [Vec<Vec<Array1<C64>>>],
) -> Result<(), GroupError> {
    for (p, irrep) in group.irreps().iter().enumerate() {
        let p00 = projector(group, sub_action, p, 0, 0)?;
        let (evals, evecs) = p00
            .eigh(UPLO::Lower)
            .map_err(|e| GroupError::Linalg(linalg::LinalgError::Eig(e.to_string())))?;
        let kept: Vec<usize> = evals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.5)
            .map(|(i, _)| i)
            .collect();
        for m in 0..irrep.dim {
            let transfer = if m == 0 {
                None
            } else {
                Some(projector(group, sub_action, p, m, 0)?)
            };
            for &k in &kept {
                let base = evecs.column(k).to_owned();
                let local = match &transfer {
                    None => base,
                    Some(t) => t.dot(&base),
                };
                let mut row = Array1::<C64>::zeros(full_dim);
                for (i, &idx) in embed.iter().enumerate() {
                    // T's rows hold expansion coefficients of Ξ over Ψ, so
                    // conjugate the subspace basis vectors
                    row[idx] = local[i].conj();
                }
                rows[p][m].push(row);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, frob_diff, rel_frob_diff, to_complex};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cyclic_two_has_trivial_and_sign_characters() {
        let g = FiniteGroup::cyclic(2).unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(g.irreps().len(), 2);
        assert!((g.irreps()[0].characters[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((g.irreps()[1].characters[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cyclic_one_is_trivial_group() {
        let g = FiniteGroup::cyclic(1).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(g.irreps().len(), 1);
        assert!((g.irreps()[0].characters[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cyclic_zero_rejected() {
        assert!(matches!(
            FiniteGroup::cyclic(0),
            Err(GroupError::InvalidOrder(_))
        ));
    }

    #[test]
    fn cyclic_three_characters_are_cube_roots() {
        let g = FiniteGroup::cyclic(3).unwrap();
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((g.irreps()[1].characters[1] - w).norm() < 1e-14);
        assert!((g.irreps()[2].characters[1] - w * w).norm() < 1e-14);
    }

    #[test]
    fn dihedral_three_matches_presentation() {
        let g = FiniteGroup::dihedral(3).unwrap();
        assert_eq!(g.order(), 6);
        let dims: Vec<usize> = g.irreps().iter().map(|p| p.dim).collect();
        assert_eq!(dims, vec![1, 1, 2]);
        // κ r κ = r^{-1}
        let (r, k) = (1usize, 3usize);
        assert_eq!(g.mul(g.mul(k, r), k), g.inverse(r));
        // standard irrep matrices as printed
        let st = &g.irreps()[2];
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((st.matrices[r][(0, 0)] - w).norm() < 1e-14);
        assert!((st.matrices[r][(1, 1)] - w * w).norm() < 1e-14);
        assert!((st.matrices[k][(0, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((st.matrices[k][(1, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        // trace of the standard irrep at r is ω + ω² = −1
        assert!((st.characters[r] - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn dihedral_too_small_rejected() {
        assert!(FiniteGroup::dihedral(2).is_err());
    }

    #[test]
    fn dihedral_four_irrep_table() {
        // oracle: brute-force conjugacy classes from the multiplication table
        let g = FiniteGroup::dihedral(4).unwrap();
        assert_eq!(g.order(), 8);
        let mut dims: Vec<usize> = g.irreps().iter().map(|p| p.dim).collect();
        dims.sort_unstable();
        assert_eq!(dims, vec![1, 1, 1, 1, 2]);
        assert_eq!(g.conjugacy_classes().len(), 5);
        assert_eq!(g.irreps().len(), g.conjugacy_classes().len());
    }

    #[test]
    fn irrep_matrices_are_unitary_homomorphisms() {
        for g in [
            FiniteGroup::cyclic(3).unwrap(),
            FiniteGroup::dihedral(3).unwrap(),
            FiniteGroup::dihedral(4).unwrap(),
        ] {
            for p in g.irreps() {
                for gi in 0..g.order() {
                    let m = &p.matrices[gi];
                    let mh = linalg::conj_transpose(m);
                    let prod = mh.dot(m);
                    assert!(
                        frob_diff(&prod, &Array2::eye(p.dim)) < 1e-12,
                        "{} irrep {} not unitary",
                        g.name(),
                        p.name
                    );
                    for gj in 0..g.order() {
                        let lhs = p.matrices[gi].dot(&p.matrices[gj]);
                        assert!(frob_diff(&lhs, &p.matrices[g.mul(gi, gj)]) < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn character_orthogonality() {
        for g in [
            FiniteGroup::cyclic(2).unwrap(),
            FiniteGroup::cyclic(3).unwrap(),
            FiniteGroup::dihedral(3).unwrap(),
            FiniteGroup::dihedral(4).unwrap(),
        ] {
            for (pi, p) in g.irreps().iter().enumerate() {
                for (qi, q) in g.irreps().iter().enumerate() {
                    let s: C64 = (0..g.order())
                        .map(|e| p.characters[e] * q.characters[e].conj())
                        .sum();
                    let expected = if pi == qi { g.order() as f64 } else { 0.0 };
                    assert!(
                        (s - c(expected, 0.0)).norm() < 1e-10,
                        "{}: <{},{}> = {}",
                        g.name(),
                        p.name,
                        q.name,
                        s
                    );
                }
            }
        }
    }

    #[test]
    fn direct_product_z2_d3() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let g = FiniteGroup::direct_product(&z2, &d3).unwrap();
        assert_eq!(g.order(), 12);
        let mut dims: Vec<usize> = g.irreps().iter().map(|p| p.dim).collect();
        dims.sort_unstable();
        assert_eq!(dims, vec![1, 1, 1, 1, 2, 2]);
    }

    #[test]
    fn direct_product_with_trivial_group() {
        let z1 = FiniteGroup::cyclic(1).unwrap();
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let g = FiniteGroup::direct_product(&z1, &d3).unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(g.irreps().len(), 3);
        for (p, q) in g.irreps().iter().zip(d3.irreps()) {
            for e in 0..6 {
                assert!((p.characters[e] - q.characters[e]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn direct_product_z2_z2_all_one_dimensional() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let g = FiniteGroup::direct_product(&z2, &z2).unwrap();
        assert_eq!(g.irreps().len(), 4);
        assert!(g.irreps().iter().all(|p| p.dim == 1));
    }

    #[test]
    fn sum_of_squared_dims_matches_order() {
        for g in [
            FiniteGroup::cyclic(5).unwrap(),
            FiniteGroup::dihedral(5).unwrap(),
            FiniteGroup::dihedral(6).unwrap(),
            FiniteGroup::direct_product(
                &FiniteGroup::cyclic(2).unwrap(),
                &FiniteGroup::dihedral(4).unwrap(),
            )
            .unwrap(),
        ] {
            let s: usize = g.irreps().iter().map(|p| p.dim * p.dim).sum();
            assert_eq!(s, g.order());
            assert_eq!(g.irreps().len(), g.conjugacy_classes().len());
        }
    }

    #[test]
    fn build_action_sign_flip() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let m = Array2::from_diag(&array![-1.0, -1.0]);
        let a = GroupAction::build(&z2, &[m]).unwrap();
        assert!(frob_f64(&(a.matrix(0) - &Array2::<f64>::eye(2))) < 1e-14);
        assert!(frob_f64(&(a.matrix(1) + &Array2::<f64>::eye(2))) < 1e-14);
    }

    #[test]
    fn build_action_rejects_broken_relation() {
        // M(r)³ ≠ I for D3
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let bad_r = Array2::from_diag(&array![2.0, 1.0]);
        let kappa = array![[0.0, 1.0], [1.0, 0.0]];
        let err = GroupAction::build(&d3, &[bad_r, kappa]).unwrap_err();
        match err {
            GroupError::InconsistentAction { residual, .. } => assert!(residual > 1.0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn build_action_identity_generators_is_trivial() {
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::build(&d3, &[Array2::eye(2), Array2::eye(2)]).unwrap();
        for e in 0..6 {
            assert!(frob_f64(&(a.matrix(e) - &Array2::<f64>::eye(2))) < 1e-14);
        }
    }

    #[test]
    fn cayley_rep_of_z2() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let a = GroupAction::cayley(&z2);
        assert!(frob_f64(&(a.matrix(0) - &Array2::<f64>::eye(2))) < 1e-14);
        assert_eq!(a.matrix(1)[(0, 1)], 1.0);
        assert_eq!(a.matrix(1)[(1, 0)], 1.0);
    }

    #[test]
    fn cayley_rep_closed_under_multiplication() {
        // brute-force check P(γ1)P(γ2) = P(γ1 γ2) over all pairs
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        assert!(a.representation_residual() < 1e-14);
        assert!(a.is_permutation());
    }

    #[test]
    fn projector_even_odd_for_sign_flip() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let flip = GroupAction::build(&z2, &[Array2::from_diag(&array![-1.0, -1.0])]).unwrap();
        // trivial irrep on the sign-flip action of R²: ½(I + (−I)) = 0
        let p_even = projector(&z2, &flip, 0, 0, 0).unwrap();
        assert!(frob(&p_even) < 1e-14);
        let p_odd = projector(&z2, &flip, 1, 0, 0).unwrap();
        assert!(frob_diff(&p_odd, &to_complex(&Array2::<f64>::eye(2))) < 1e-14);
    }

    #[test]
    fn projector_trivial_group_is_identity() {
        let z1 = FiniteGroup::cyclic(1).unwrap();
        let a = GroupAction::trivial(&z1, 3);
        let p = projector(&z1, &a, 0, 0, 0).unwrap();
        assert!(frob_diff(&p, &to_complex(&Array2::eye(3))) < 1e-14);
    }

    #[test]
    fn projector_index_out_of_range() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let a = GroupAction::cayley(&z2);
        assert!(projector(&z2, &a, 0, 1, 0).is_err());
        assert!(projector(&z2, &a, 5, 0, 0).is_err());
    }

    fn matrix_rank(m: &Array2<C64>) -> usize {
        let (_, s, _) = m.svd(false, false).unwrap();
        let smax = s.iter().cloned().fold(0.0_f64, f64::max);
        if smax == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > 1e-10 * smax).count()
    }

    #[test]
    fn regular_rep_projector_ranks_match_irrep_dims() {
        // rank of P^p_{mm} on the regular representation equals d_p
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        assert_eq!(matrix_rank(&projector(&d3, &a, 0, 0, 0).unwrap()), 1);
        assert_eq!(matrix_rank(&projector(&d3, &a, 2, 0, 0).unwrap()), 2);
        assert_eq!(matrix_rank(&projector(&d3, &a, 2, 1, 1).unwrap()), 2);
    }

    #[test]
    fn character_projector_traces_on_regular_rep() {
        // the regular representation contains each irrep d_p times, so the
        // character projector traces are d_p²: (1, 1, 4) for D3
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        let traces: Vec<f64> = (0..3)
            .map(|p| {
                let m = character_projector(&d3, &a, p).unwrap();
                (0..6).map(|i| m[(i, i)].re).sum()
            })
            .collect();
        assert!((traces[0] - 1.0).abs() < 1e-12);
        assert!((traces[1] - 1.0).abs() < 1e-12);
        assert!((traces[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn character_projector_z2_examples() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let flip = GroupAction::build(&z2, &[Array2::from_diag(&array![-1.0, -1.0])]).unwrap();
        let p_tr = character_projector(&z2, &flip, 0).unwrap();
        assert!(frob(&p_tr) < 1e-14);
        let p_sign = character_projector(&z2, &flip, 1).unwrap();
        assert!(frob_diff(&p_sign, &to_complex(&Array2::<f64>::eye(2))) < 1e-14);
    }

    #[test]
    fn projector_idempotence_orthogonality_completeness() {
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        let mut total = Array2::<C64>::zeros((6, 6));
        for (p, irrep) in d3.irreps().iter().enumerate() {
            for m in 0..irrep.dim {
                let pm = projector(&d3, &a, p, m, m).unwrap();
                assert!(frob_diff(&pm.dot(&pm), &pm) < 1e-10);
                total += &pm;
            }
        }
        assert!(frob_diff(&total, &to_complex(&Array2::eye(6))) < 1e-10);
        // composition rule P^p_{nm} P^q_{kl} = δ_pq δ_mk P^p_{nl}
        let st = 2usize;
        for n in 0..2 {
            for m in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let lhs = projector(&d3, &a, st, n, m)
                            .unwrap()
                            .dot(&projector(&d3, &a, st, k, l).unwrap());
                        let expect = if m == k {
                            projector(&d3, &a, st, n, l).unwrap()
                        } else {
                            Array2::zeros((6, 6))
                        };
                        assert!(frob_diff(&lhs, &expect) < 1e-10);
                    }
                }
            }
        }
        // across different irreps the product vanishes
        let cross = projector(&d3, &a, 0, 0, 0)
            .unwrap()
            .dot(&projector(&d3, &a, 2, 0, 0).unwrap());
        assert!(frob(&cross) < 1e-12);
    }

    #[test]
    fn isotypic_transform_z2_swap_orbit() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let a = GroupAction::cayley(&z2); // swap of a 2-element orbit
        let t = isotypic_transform(&z2, &a).unwrap();
        let expect = array![[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(-1.0, 0.0)]];
        assert!(frob_diff(&t.matrix, &expect) < 1e-14);
        assert_eq!(t.block_layout.len(), 2);
    }

    #[test]
    fn isotypic_transform_trivial_group_is_identity() {
        let z1 = FiniteGroup::cyclic(1).unwrap();
        let a = GroupAction::trivial(&z1, 4);
        let t = isotypic_transform(&z1, &a).unwrap();
        assert!(frob_diff(&t.matrix, &to_complex(&Array2::eye(4))) < 1e-14);
    }

    #[test]
    fn isotypic_transform_d3_regular_orbit_matches_printed_rows() {
        // the six rows of the D3 transform on one free orbit, as a set
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        let t = isotypic_transform(&d3, &a).unwrap();
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let expected_rows: Vec<Array1<C64>> = vec![
            array![one, one, one, one, one, one],
            array![one, one, one, -one, -one, -one],
            array![one, w, w * w, zero, zero, zero],
            array![zero, zero, zero, one, w * w, w],
            array![one, w * w, w, zero, zero, zero],
            array![zero, zero, zero, one, w, w * w],
        ];
        let mut used = vec![false; 6];
        for i in 0..6 {
            let row = t.matrix.row(i);
            let hit = expected_rows.iter().enumerate().find(|(j, er)| {
                !used[*j]
                    && row
                        .iter()
                        .zip(er.iter())
                        .all(|(a, b)| (a - b).norm() < 1e-12)
            });
            let (j, _) = hit.unwrap_or_else(|| panic!("row {i} not among printed rows"));
            used[j] = true;
        }
        // layout: two singleton blocks then two copies of the standard irrep
        let sizes: Vec<usize> = t.block_layout.iter().map(|b| b.size).collect();
        assert_eq!(sizes, vec![1, 1, 2, 2]);
    }

    #[test]
    fn isotypic_action_is_component_block_diagonal() {
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        let t = isotypic_transform(&d3, &a).unwrap();
        let tinv = t.inverse().unwrap();
        let comps = t.component_ranges();
        for g in 0..6 {
            let m = t.matrix.dot(&to_complex(a.matrix(g))).dot(&tinv);
            let mut off = 0.0_f64;
            for (i, row) in m.rows().into_iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let same = comps.iter().any(|(_, r)| r.contains(&i) && r.contains(&j));
                    if !same {
                        off += v.norm_sqr();
                    }
                }
            }
            assert!(off.sqrt() < 1e-10, "element {g} leaks {off}");
        }
    }

    #[test]
    fn isotypic_commutant_is_per_copy_block_diagonal_with_equal_copies() {
        // a generic operator commuting with the regular action becomes block
        // diagonal in the per-copy layout, with equal copies inside an irrep
        use rand::Rng;
        use rand::SeedableRng;
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        let t = isotypic_transform(&d3, &a).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let raw = Array2::<f64>::from_shape_fn((6, 6), |_| rng.random_range(-1.0..1.0));
        // group averaging lands in the commutant
        let mut k = Array2::<f64>::zeros((6, 6));
        for g in 0..6 {
            k = k + a.matrix(g).dot(&raw).dot(&a.matrix(g).t());
        }
        let kc = to_complex(&k);
        for g in 0..6 {
            let mg = to_complex(a.matrix(g));
            assert!(frob_diff(&mg.dot(&kc), &kc.dot(&mg)) < 1e-10);
        }
        // conjugating the commutant by T^{-T} · T^T is the block form that
        // Gram-based fits on transformed evaluations see
        let tinv = t.inverse().unwrap();
        let k_xi = tinv.t().to_owned().dot(&kc).dot(&t.matrix.t().to_owned());
        let ranges = t.block_ranges();
        let mut blocks = Vec::new();
        for r in &ranges {
            blocks.push(k_xi.slice(s![r.clone(), r.clone()]).to_owned());
        }
        let mut off = k_xi.clone();
        for r in &ranges {
            off.slice_mut(s![r.clone(), r.clone()]).fill(c(0.0, 0.0));
        }
        assert!(frob(&off) / frob(&k_xi) < 1e-10);
        // the two standard-irrep copies are identical
        assert!(rel_frob_diff(&blocks[3], &blocks[2]) < 1e-10);
    }

    #[test]
    fn isotypic_transform_signed_action_splits_parity() {
        // sign-flip action on a monomial-style index space: diag(±1), not a
        // permutation, exercising the general projector route
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let sign = Array2::from_diag(&array![1.0, -1.0, -1.0, 1.0]);
        let a = GroupAction::build(&z2, &[sign]).unwrap();
        let t = isotypic_transform(&z2, &a).unwrap();
        let sizes: Vec<usize> = t.block_layout.iter().map(|b| b.size).collect();
        assert_eq!(sizes, vec![2, 2]);
        let tinv = t.inverse().unwrap();
        for g in 0..2 {
            let m = t.matrix.dot(&to_complex(a.matrix(g))).dot(&tinv);
            let off = m.slice(s![0..2, 2..4]).to_owned();
            let off2 = m.slice(s![2..4, 0..2]).to_owned();
            assert!(frob(&off) + frob(&off2) < 1e-12);
        }
    }

    #[test]
    fn group_document_round_trip() {
        let d3 = FiniteGroup::dihedral(3).unwrap();
        let a = GroupAction::cayley(&d3);
        let doc = d3.to_document(Some(&a));
        let json = serde_json::to_string(&doc).unwrap();
        let back: GroupDocument = serde_json::from_str(&json).unwrap();
        let g2 = FiniteGroup::from_document(&back).unwrap();
        assert_eq!(g2.order(), 6);
        assert_eq!(g2.irreps().len(), 3);
        for (p, q) in g2.irreps().iter().zip(d3.irreps()) {
            for e in 0..6 {
                assert!((p.characters[e] - q.characters[e]).norm() < 1e-14);
            }
        }
    }
}

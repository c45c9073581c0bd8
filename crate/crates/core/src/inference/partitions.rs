//! Index-coincidence expansion of permutation moments.
//!
//! For symmetric A and B, the r-th raw moment of T_π = Σ_{ij} A_ij B_{π(i)π(j)}
//! over uniform π is a sum over the 2r index positions (i₁ j₁ … i_r j_r). Group
//! index tuples by which positions coincide (a set partition P of the
//! positions). A uniform π maps a tuple of pattern P to a uniform tuple of the
//! same pattern, so
//!
//! E[T^r] = Σ_P S_A(P) · S_B(P) / (N)_{|P|},
//!
//! where S_M(P) sums the product of r entries of M over tuples whose pattern is
//! exactly P and (N)_k is the falling factorial. Exact-pattern sums come from
//! "at least P" sums (free sums with the coincidences of P imposed) by Möbius
//! inversion on the partition lattice. Each at-least sum factors over the
//! connected components of a small multigraph (blocks as vertices, matrix
//! entries as edges) and is evaluated by variable elimination.

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

/// Canonical edge list of a connected multigraph on vertices 0..v.
type ComponentKey = Vec<(u8, u8)>;

pub(crate) struct PartitionTable {
    /// Number of blocks of each partition.
    pub blocks: Vec<usize>,
    /// Components of the multigraph of each partition.
    components: Vec<Vec<ComponentKey>>,
    /// (finer P, coarser Q, μ(P, Q)) for all P ≤ Q.
    refinements: Vec<(usize, usize, f64)>,
}

impl PartitionTable {
    fn build(edges: usize) -> Self {
        let positions = 2 * edges;
        let parts = set_partitions(positions);
        let blocks: Vec<usize> = parts
            .iter()
            .map(|p| usize::from(*p.iter().max().unwrap()) + 1)
            .collect();
        let components = parts
            .iter()
            .map(|p| {
                let e: Vec<(u8, u8)> = (0..edges).map(|k| (p[2 * k], p[2 * k + 1])).collect();
                split_components(&e)
            })
            .collect();
        let mut refinements = Vec::new();
        for (pi, p) in parts.iter().enumerate() {
            for (qi, q) in parts.iter().enumerate() {
                if let Some(mu) = moebius(p, blocks[pi], q, blocks[qi]) {
                    refinements.push((pi, qi, mu));
                }
            }
        }
        Self {
            blocks,
            components,
            refinements,
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    /// Exact-pattern sums of `m` for every partition.
    pub fn exact_sums(&self, m: &DMatrix<f64>, cache: &mut ComponentCache) -> Vec<f64> {
        let at_least: Vec<f64> = self
            .components
            .iter()
            .map(|comps| comps.iter().map(|k| cache.value(m, k)).product())
            .collect();
        let mut exact = vec![0.0; self.len()];
        for &(p, q, mu) in &self.refinements {
            exact[p] += mu * at_least[q];
        }
        exact
    }
}

/// Partition tables for the second (4 positions) and third (6 positions) moments.
pub(crate) fn table(edges: usize) -> &'static PartitionTable {
    static SECOND: OnceLock<PartitionTable> = OnceLock::new();
    static THIRD: OnceLock<PartitionTable> = OnceLock::new();
    match edges {
        2 => SECOND.get_or_init(|| PartitionTable::build(2)),
        3 => THIRD.get_or_init(|| PartitionTable::build(3)),
        _ => unreachable!("only second and third moments are tabulated"),
    }
}

/// All set partitions of `m` positions as restricted growth strings.
pub(crate) fn set_partitions(m: usize) -> Vec<Vec<u8>> {
    fn rec(prefix: &mut Vec<u8>, max: u8, m: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == m {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=max + 1 {
            prefix.push(b);
            rec(prefix, max.max(b), m, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut prefix = vec![0];
    rec(&mut prefix, 0, m, &mut out);
    out
}

/// μ(P, Q) if P refines Q, else `None`.
fn moebius(p: &[u8], p_blocks: usize, q: &[u8], q_blocks: usize) -> Option<f64> {
    let mut image = vec![u8::MAX; p_blocks];
    for (&a, &b) in p.iter().zip(q) {
        let slot = &mut image[usize::from(a)];
        if *slot == u8::MAX {
            *slot = b;
        } else if *slot != b {
            return None;
        }
    }
    let mut merged = vec![0usize; q_blocks];
    for &b in &image {
        merged[usize::from(b)] += 1;
    }
    Some(
        merged
            .into_iter()
            .map(|k| {
                let fact: f64 = (1..k).map(|x| x as f64).product();
                if k % 2 == 1 {
                    fact
                } else {
                    -fact
                }
            })
            .product(),
    )
}

fn split_components(edges: &[(u8, u8)]) -> Vec<ComponentKey> {
    let verts = edges
        .iter()
        .map(|&(a, b)| a.max(b))
        .max()
        .map_or(0, |m| usize::from(m) + 1);
    let mut comp: Vec<usize> = (0..verts).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while c[r] != r {
            r = c[r];
        }
        c[x] = r;
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut comp, a.into()), find(&mut comp, b.into()));
        comp[ra] = rb;
    }
    let mut groups: Vec<(usize, Vec<(u8, u8)>)> = Vec::new();
    for &(a, b) in edges {
        let root = find(&mut comp, a.into());
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push((a, b)),
            None => groups.push((root, vec![(a, b)])),
        }
    }
    groups.into_iter().map(|(_, g)| canonical(&g)).collect()
}

/// Relabel vertices to minimize the sorted edge list.
fn canonical(edges: &[(u8, u8)]) -> ComponentKey {
    let mut verts: Vec<u8> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    verts.sort_unstable();
    verts.dedup();
    let mut best: Option<ComponentKey> = None;
    for perm in permutations(verts.len()) {
        let relabel = |v: u8| perm[verts.iter().position(|&x| x == v).unwrap()] as u8;
        let mut key: ComponentKey = edges
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (relabel(a), relabel(b));
                (a.min(b), a.max(b))
            })
            .collect();
        key.sort_unstable();
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    }
    best.unwrap_or_default()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..n {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Memoized component sums for one matrix.
#[derive(Default)]
pub(crate) struct ComponentCache {
    values: HashMap<ComponentKey, f64>,
}

impl ComponentCache {
    fn value(&mut self, m: &DMatrix<f64>, key: &ComponentKey) -> f64 {
        if let Some(&v) = self.values.get(key) {
            return v;
        }
        let v = contract(m, key);
        self.values.insert(key.clone(), v);
        v
    }
}

enum Factor<'a> {
    Vector(usize, DVector<f64>),
    /// Entry (i, j) is indexed by (vars.0 = i, vars.1 = j).
    Matrix((usize, usize), Cow<'a, DMatrix<f64>>),
}

/// Σ over all vertex assignments of Π_{(u,v) ∈ edges} M[x_u, x_v].
pub(crate) fn contract(m: &DMatrix<f64>, edges: &[(u8, u8)]) -> f64 {
    let n = m.nrows();
    let mut factors: Vec<Factor<'_>> = edges
        .iter()
        .map(|&(a, b)| {
            if a == b {
                Factor::Vector(a.into(), m.diagonal())
            } else {
                Factor::Matrix((a.into(), b.into()), Cow::Borrowed(m))
            }
        })
        .collect();
    let mut live: Vec<usize> = edges
        .iter()
        .flat_map(|&(a, b)| [a.into(), b.into()])
        .collect();
    live.sort_unstable();
    live.dedup();
    let mut scalar = 1.0;

    let neighbours = |factors: &[Factor<'_>], v: usize| -> Vec<usize> {
        let mut out: Vec<usize> = factors
            .iter()
            .filter_map(|f| match f {
                Factor::Matrix((a, b), _) if *a == v => Some(*b),
                Factor::Matrix((a, b), _) if *b == v => Some(*a),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    };

    while !live.is_empty() {
        let (pos, v) = live
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| neighbours(&factors, v).len())
            .map(|(p, &v)| (p, v))
            .unwrap();
        live.remove(pos);
        let ws = neighbours(&factors, v);

        let mut weight = DVector::from_element(n, 1.0);
        // Per neighbour: matrix indexed (w, v).
        let mut links: Vec<(usize, DMatrix<f64>)> = Vec::new();
        let mut kept = Vec::with_capacity(factors.len());
        for f in factors.into_iter() {
            match f {
                Factor::Vector(u, data) if u == v => weight.component_mul_assign(&data),
                Factor::Matrix((a, b), data) if a == v || b == v => {
                    let (w, oriented) = if b == v {
                        (a, data.into_owned())
                    } else {
                        (b, data.transpose())
                    };
                    match links.iter_mut().find(|(x, _)| *x == w) {
                        Some((_, acc)) => acc.component_mul_assign(&oriented),
                        None => links.push((w, oriented)),
                    }
                }
                other => kept.push(other),
            }
        }
        factors = kept;
        match ws.len() {
            0 => scalar *= weight.sum(),
            1 => {
                let (w, mat) = links.pop().unwrap();
                factors.push(Factor::Vector(w, mat * weight));
            }
            2 => {
                let (w2, m2) = links.pop().unwrap();
                let (w1, mut m1) = links.pop().unwrap();
                for (j, mut col) in m1.column_iter_mut().enumerate() {
                    col *= weight[j];
                }
                factors.push(Factor::Matrix((w1, w2), Cow::Owned(m1 * m2.transpose())));
            }
            k => unreachable!("elimination produced a {k}-way factor"),
        }
    }
    scalar
}

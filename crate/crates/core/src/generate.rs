//! Bounded-degree structure families with a symmetric binary relation `E`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::Signature;
use crate::structure::{Elem, Structure, StructureBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    Cycle,
    /// Random `d`-regular graph (approximately, for odd `n·d`).
    Random,
    /// Prism `C_{n/2} x K_2`: 3-regular and vertex-transitive.
    Ladder,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Family::Path),
            "cycle" => Ok(Family::Cycle),
            "random" => Ok(Family::Random),
            "ladder" => Ok(Family::Ladder),
            other => Err(format!("unknown family `{other}` (expected path, cycle, random or ladder)")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::Random => "random",
            Family::Ladder => "ladder",
        })
    }
}

/// Builds a structure with `E` stored in both directions.
pub fn from_edges(n: usize, edges: &[(Elem, Elem)]) -> Structure {
    let sig = Signature::from_relations([("E", 2)]).expect("valid signature");
    let mut b = StructureBuilder::new(sig).with_elements(n);
    for &(u, v) in edges {
        b.add_fact(0, &[u, v]);
        b.add_fact(0, &[v, u]);
    }
    b.build()
}

pub fn path_edges(n: usize) -> Vec<(Elem, Elem)> {
    (1..n as Elem).map(|i| (i - 1, i)).collect()
}

pub fn cycle_edges(n: usize) -> Vec<(Elem, Elem)> {
    if n < 3 {
        return path_edges(n);
    }
    (0..n as Elem).map(|i| (i, (i + 1) % n as Elem)).collect()
}

pub fn ladder_edges(n: usize) -> Vec<(Elem, Elem)> {
    let m = (n / 2) as Elem;
    if m < 3 {
        return path_edges(n);
    }
    let mut e = Vec::with_capacity(3 * m as usize);
    for i in 0..m {
        e.push((i, (i + 1) % m));
        e.push((m + i, m + (i + 1) % m));
        e.push((i, m + i));
    }
    e
}

/// Circulant start graph followed by `10·|E|` random double-edge swaps.
pub fn random_regular_edges(n: usize, d: usize, seed: u64) -> Vec<(Elem, Elem)> {
    if n < d + 2 || d == 0 {
        return path_edges(n);
    }
    let mut edges: Vec<(Elem, Elem)> = Vec::new();
    let norm = |a: Elem, b: Elem| if a < b { (a, b) } else { (b, a) };
    for i in 0..n {
        for j in 1..=d / 2 {
            edges.push(norm(i as Elem, ((i + j) % n) as Elem));
        }
        if d % 2 == 1 && n.is_multiple_of(2) && i < n / 2 {
            edges.push(norm(i as Elem, (i + n / 2) as Elem));
        }
    }
    let mut set: HashSet<(Elem, Elem)> = edges.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 * edges.len() {
        let i = rng.random_range(0..edges.len());
        let j = rng.random_range(0..edges.len());
        let ((a, b), (c, d2)) = (edges[i], edges[j]);
        let (x, y) = if rng.random::<bool>() { ((a, d2), (c, b)) } else { ((a, c), (b, d2)) };
        if x.0 == x.1 || y.0 == y.1 {
            continue;
        }
        let (x, y) = (norm(x.0, x.1), norm(y.0, y.1));
        if x == y || set.contains(&x) || set.contains(&y) {
            continue;
        }
        set.remove(&edges[i]);
        set.remove(&edges[j]);
        set.insert(x);
        set.insert(y);
        edges[i] = x;
        edges[j] = y;
    }
    edges.sort_unstable();
    edges
}

pub fn generate(family: Family, n: usize, d: usize, seed: u64) -> Structure {
    let edges = match family {
        Family::Path => path_edges(n),
        Family::Cycle => cycle_edges(n),
        Family::Random => random_regular_edges(n, d, seed),
        Family::Ladder => ladder_edges(n),
    };
    let n = if family == Family::Ladder && n >= 6 { n / 2 * 2 } else { n };
    from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::gaifman_graph;

    #[test]
    fn degrees() {
        for (fam, n, d) in [(Family::Path, 10, 2), (Family::Cycle, 10, 2), (Family::Ladder, 20, 3), (Family::Random, 50, 3)] {
            let s = generate(fam, n, 3, 7);
            let g = gaifman_graph(&s);
            assert_eq!(s.len(), n);
            assert_eq!(g.max_degree(), d, "{fam}");
        }
        let g = gaifman_graph(&generate(Family::Ladder, 30, 3, 0));
        assert!(g.edge_count() == 45);
    }

    #[test]
    fn random_is_regular_and_seeded() {
        let a = random_regular_edges(100, 3, 1);
        assert_eq!(a, random_regular_edges(100, 3, 1));
        assert_ne!(a, random_regular_edges(100, 3, 2));
        let g = gaifman_graph(&from_edges(100, &a));
        assert!((0..100).all(|e| g.neighbors(e).len() == 3));
    }

    #[test]
    fn family_names() {
        for f in [Family::Path, Family::Cycle, Family::Random, Family::Ladder] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("tree".parse::<Family>().is_err());
    }
}

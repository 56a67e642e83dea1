//! Relational structures, their Gaifman graphs and the bounded-depth distance index.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{FormulaError, IndexError, LoadError};
use crate::formula::Signature;

/// An element, identified by its rank in the domain order.
pub type Elem = u32;

/// A finite relational structure whose domain order is the declaration order.
#[derive(Debug, Clone)]
pub struct Structure {
    sig: Signature,
    names: Vec<String>,
    by_name: HashMap<String, Elem>,
    facts: Vec<Vec<Box<[Elem]>>>,
    fact_sets: Vec<HashSet<Box<[Elem]>>>,
    // (relation, fact index) for every fact an element occurs in, listed once per fact
    incident: Vec<Vec<(u32, u32)>>,
}

impl Structure {
    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        0..self.names.len() as Elem
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e as usize]
    }

    pub fn element(&self, name: &str) -> Option<Elem> {
        self.by_name.get(name).copied()
    }

    /// Facts of `rel`, sorted and duplicate-free.
    pub fn facts(&self, rel: usize) -> &[Box<[Elem]>] {
        &self.facts[rel]
    }

    pub fn fact_count(&self) -> usize {
        self.facts.iter().map(Vec::len).sum()
    }

    pub fn holds(&self, rel: usize, tuple: &[Elem]) -> bool {
        self.fact_sets[rel].contains(tuple)
    }

    /// Facts containing `e`, each listed once.
    pub fn incident(&self, e: Elem) -> impl Iterator<Item = (usize, &[Elem])> + '_ {
        self.incident[e as usize]
            .iter()
            .map(|&(rel, i)| (rel as usize, &*self.facts[rel as usize][i as usize]))
    }

    /// Serializes to the facts-file format accepted by [`load_structure`].
    pub fn to_facts_text(&self) -> String {
        let mut out = String::new();
        for (name, arity) in self.sig.iter() {
            let _ = writeln!(out, "rel {name} {arity}");
        }
        for name in &self.names {
            let _ = writeln!(out, "node {name}");
        }
        for (rel, facts) in self.facts.iter().enumerate() {
            for t in facts {
                out.push_str("fact ");
                out.push_str(self.sig.name(rel));
                for &e in t.iter() {
                    out.push(' ');
                    out.push_str(&self.names[e as usize]);
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Incremental construction of a [`Structure`].
#[derive(Debug, Clone)]
pub struct StructureBuilder {
    sig: Signature,
    names: Vec<String>,
    by_name: HashMap<String, Elem>,
    facts: Vec<Vec<Box<[Elem]>>>,
}

impl StructureBuilder {
    pub fn new(sig: Signature) -> Self {
        let facts = vec![Vec::new(); sig.len()];
        Self { sig, names: Vec::new(), by_name: HashMap::new(), facts }
    }

    /// Appends an element at the end of the domain order.
    pub fn add_element(&mut self, name: impl Into<String>) -> Option<Elem> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return None;
        }
        let e = self.names.len() as Elem;
        self.by_name.insert(name.clone(), e);
        self.names.push(name);
        Some(e)
    }

    /// Adds `n` elements named `0..n`.
    pub fn with_elements(mut self, n: usize) -> Self {
        for i in 0..n {
            self.add_element(i.to_string());
        }
        self
    }

    pub fn add_fact(&mut self, rel: usize, tuple: &[Elem]) {
        assert_eq!(tuple.len(), self.sig.arity(rel), "arity mismatch");
        assert!(tuple.iter().all(|&e| (e as usize) < self.names.len()), "unknown element");
        self.facts[rel].push(tuple.into());
    }

    pub fn build(self) -> Structure {
        let n = self.names.len();
        let mut facts = self.facts;
        for fs in &mut facts {
            fs.sort_unstable();
            fs.dedup();
        }
        let fact_sets = facts.iter().map(|fs| fs.iter().cloned().collect()).collect();
        let mut incident = vec![Vec::new(); n];
        for (rel, fs) in facts.iter().enumerate() {
            for (i, t) in fs.iter().enumerate() {
                let mut seen: Vec<Elem> = t.to_vec();
                seen.sort_unstable();
                seen.dedup();
                for e in seen {
                    incident[e as usize].push((rel as u32, i as u32));
                }
            }
        }
        Structure { sig: self.sig, names: self.names, by_name: self.by_name, facts, fact_sets, incident }
    }
}

/// Parses a facts document.
///
/// ```text
/// # comment
/// rel E 2
/// node a
/// node b
/// fact E a b
/// ```
///
/// Declarations may appear anywhere; `node` lines define the domain order.
pub fn load_structure(doc: &str) -> Result<Structure, LoadError> {
    let mut sig = Signature::new();
    let mut nodes = Vec::new();
    let mut seen_nodes = HashSet::new();
    let mut fact_lines = Vec::new();
    for (i, raw) in doc.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().take_while(|t| !t.starts_with('#')).collect();
        let Some((&kw, rest)) = toks.split_first() else { continue };
        match kw {
            "rel" => {
                let [name, arity] = rest else {
                    return Err(LoadError::Syntax { line, msg: "expected `rel NAME ARITY`".into() });
                };
                let arity: usize = arity
                    .parse()
                    .map_err(|_| LoadError::Syntax { line, msg: format!("bad arity `{arity}`") })?;
                sig.add_relation(name, arity).map_err(|e| match e {
                    FormulaError::DuplicateRelation(name) => LoadError::DuplicateRelation { line, name },
                    other => LoadError::Syntax { line, msg: other.to_string() },
                })?;
            }
            "node" => {
                let [id] = rest else {
                    return Err(LoadError::Syntax { line, msg: "expected `node ID`".into() });
                };
                if !seen_nodes.insert(*id) {
                    return Err(LoadError::DuplicateElement { line, id: id.to_string() });
                }
                nodes.push(*id);
            }
            "fact" => {
                if rest.is_empty() {
                    return Err(LoadError::Syntax { line, msg: "expected `fact NAME ID...`".into() });
                }
                fact_lines.push((line, rest.to_vec()));
            }
            other => {
                return Err(LoadError::Syntax { line, msg: format!("unknown directive `{other}`") })
            }
        }
    }
    let mut b = StructureBuilder::new(sig);
    for id in nodes {
        b.add_element(id);
    }
    let mut tuple = Vec::new();
    for (line, toks) in fact_lines {
        let name = toks[0];
        let rel = b
            .sig
            .lookup(name)
            .ok_or_else(|| LoadError::UndeclaredRelation { line, name: name.to_string() })?;
        let expected = b.sig.arity(rel);
        if toks.len() - 1 != expected {
            return Err(LoadError::ArityMismatch { line, name: name.to_string(), expected, found: toks.len() - 1 });
        }
        tuple.clear();
        for id in &toks[1..] {
            let e = *b
                .by_name
                .get(*id)
                .ok_or_else(|| LoadError::UndeclaredElement { line, id: id.to_string() })?;
            tuple.push(e);
        }
        b.add_fact(rel, &tuple);
    }
    Ok(b.build())
}

/// Undirected co-occurrence graph of a structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaifmanGraph {
    adj: Vec<Vec<Elem>>,
    max_degree: usize,
}

impl GaifmanGraph {
    pub fn neighbors(&self, e: Elem) -> &[Elem] {
        &self.adj[e as usize]
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

pub fn gaifman_graph(s: &Structure) -> GaifmanGraph {
    let mut adj = vec![Vec::new(); s.len()];
    for rel in 0..s.signature().len() {
        for t in s.facts(rel) {
            for (i, &a) in t.iter().enumerate() {
                for &b in &t[i + 1..] {
                    if a != b {
                        adj[a as usize].push(b);
                        adj[b as usize].push(a);
                    }
                }
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
    GaifmanGraph { adj, max_degree }
}

pub fn check_degree_bound(g: &GaifmanGraph, d: usize) -> bool {
    g.max_degree <= d
}

/// For every element, the elements at each exact distance up to `depth`.
///
/// Pairs farther apart than `depth` (including disconnected ones) are absent.
#[derive(Debug, Clone)]
pub struct DistanceIndex {
    depth: u32,
    // ball of element a: ball[ball_start[a]..ball_start[a+1]], sorted by (distance, element)
    ball_start: Vec<usize>,
    ball: Vec<Elem>,
    // same slots, sorted by element, carrying the distance
    by_elem: Vec<(Elem, u32)>,
    // layer i of a occupies ball_start[a] + layers[layer_start[a] + i] .. + layers[.. + i + 1]
    layer_start: Vec<usize>,
    layers: Vec<u32>,
    steps: u64,
}

pub fn build_distance_index(g: &GaifmanGraph, depth: u32) -> DistanceIndex {
    let n = g.len();
    let mut ball_start = Vec::with_capacity(n + 1);
    let mut ball = Vec::new();
    let mut by_elem = Vec::new();
    let mut layer_start = Vec::with_capacity(n + 1);
    let mut layers = Vec::new();
    let mut steps = 0u64;

    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    let mut touched = Vec::new();
    for a in 0..n {
        ball_start.push(ball.len());
        layer_start.push(layers.len());
        let base = ball.len();
        dist[a] = 0;
        touched.push(a);
        queue.push_back(a as Elem);
        let mut local = Vec::new();
        while let Some(u) = queue.pop_front() {
            local.push(u);
            let du = dist[u as usize];
            if du == depth {
                continue;
            }
            for &v in g.neighbors(u) {
                steps += 1;
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = du + 1;
                    touched.push(v as usize);
                    queue.push_back(v);
                }
            }
        }
        local.sort_unstable_by_key(|&v| (dist[v as usize], v));
        let mut current = u32::MAX;
        for (i, &v) in local.iter().enumerate() {
            let dv = dist[v as usize];
            while current == u32::MAX || current < dv {
                current = current.wrapping_add(1);
                layers.push(i as u32);
            }
        }
        layers.push(local.len() as u32);
        ball.extend_from_slice(&local);
        let mut sorted: Vec<(Elem, u32)> = local.iter().map(|&v| (v, dist[v as usize])).collect();
        sorted.sort_unstable();
        by_elem.extend(sorted);
        debug_assert_eq!(ball.len() - base, local.len());
        for &t in &touched {
            dist[t] = u32::MAX;
        }
        touched.clear();
    }
    ball_start.push(ball.len());
    layer_start.push(layers.len());
    DistanceIndex { depth, ball_start, ball, by_elem, layer_start, layers, steps }
}

impl DistanceIndex {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.ball_start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// BFS work spent building the index.
    pub fn build_steps(&self) -> u64 {
        self.steps
    }

    fn layer_offsets(&self, a: Elem) -> &[u32] {
        let a = a as usize;
        &self.layers[self.layer_start[a]..self.layer_start[a + 1]]
    }

    /// Number of non-empty layers of `a` (its eccentricity up to `depth`, plus one).
    pub fn layer_count(&self, a: Elem) -> usize {
        self.layer_offsets(a).len() - 1
    }

    /// Elements at distance exactly `i` from `a`, in domain order.
    pub fn layer(&self, a: Elem, i: u32) -> &[Elem] {
        let offs = self.layer_offsets(a);
        let i = i as usize;
        if i + 1 >= offs.len() {
            return &[];
        }
        let base = self.ball_start[a as usize];
        &self.ball[base + offs[i] as usize..base + offs[i + 1] as usize]
    }

    /// The `l`-ball of `a`, sorted by distance then domain order.
    pub fn ball_by_distance(&self, a: Elem, l: u32) -> &[Elem] {
        let offs = self.layer_offsets(a);
        let end = offs[(l as usize + 1).min(offs.len() - 1)] as usize;
        let base = self.ball_start[a as usize];
        &self.ball[base..base + end]
    }

    pub fn distance(&self, a: Elem, b: Elem) -> Option<u32> {
        let a = a as usize;
        let slice = &self.by_elem[self.ball_start[a]..self.ball_start[a + 1]];
        slice.binary_search_by_key(&b, |&(e, _)| e).ok().map(|i| slice[i].1)
    }

    /// `distance(a, b) <= l`, with `l <= depth`.
    pub fn within(&self, a: Elem, b: Elem, l: u32) -> bool {
        self.distance(a, b).is_some_and(|d| d <= l)
    }

    /// `N_l(t)`: elements within distance `l` of some component of `t`, in domain order.
    pub fn ball(&self, t: &[Elem], l: u32) -> Result<Vec<Elem>, IndexError> {
        if l > self.depth {
            return Err(IndexError::TooShallow { depth: self.depth, requested: l });
        }
        let mut out = Vec::new();
        for &a in t {
            if a as usize >= self.len() {
                return Err(IndexError::UnknownElement(a));
            }
            out.extend_from_slice(self.ball_by_distance(a, l));
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

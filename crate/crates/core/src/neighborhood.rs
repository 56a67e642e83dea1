//! Neighborhood substructures, canonical neighborhood types and the type index.
//!
//! A type is the isomorphism class of a single element's radius-`l` ball with
//! the element as distinguished center. Each realized type carries an ordered
//! representative: positions `0..size` where position 0 is the center, the
//! positions of each distance layer are contiguous and increasing with the
//! distance, and the order restricted to any smaller ball is the canonical
//! order of that smaller ball.
//!
//! The canonical order is the lexicographically least encoding over all
//! distance-stratified orders. The encoding lists, position by position, the
//! facts whose largest position is that position. Because the codes of an
//! `l`-ball are a prefix of the codes of every larger ball, minimizing the full
//! sequence also minimizes every prefix, which is what makes the orders of
//! nested balls agree.
//!
//! The search places one element at a time, keeps only the candidates with
//! the least code, and prunes with automorphisms discovered when two leaves
//! produce the same encoding.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::IndexError;
use crate::structure::{DistanceIndex, Elem, Structure};

pub type TypeId = u32;

/// The substructure induced by `N_l(centers)`, with the centers distinguished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodSubstructure {
    pub radius: u32,
    /// Domain order.
    pub elements: Vec<Elem>,
    /// Induced facts `(relation, tuple)`, sorted.
    pub facts: Vec<(usize, Vec<Elem>)>,
    pub centers: Vec<Elem>,
}

pub fn extract_neighborhood(
    s: &Structure,
    ix: &DistanceIndex,
    t: &[Elem],
    l: u32,
) -> Result<NeighborhoodSubstructure, IndexError> {
    let elements = ix.ball(t, l)?;
    let mut facts = Vec::new();
    for &e in &elements {
        for (rel, tuple) in s.incident(e) {
            let first = *tuple.iter().min().expect("non-empty tuple");
            if first == e && tuple.iter().all(|c| elements.binary_search(c).is_ok()) {
                facts.push((rel, tuple.to_vec()));
            }
        }
    }
    facts.sort();
    Ok(NeighborhoodSubstructure { radius: l, elements, facts, centers: t.to_vec() })
}

/// A ball in local coordinates: vertex 0 is the center, vertices are sorted
/// by (distance, domain order).
#[derive(Debug, Clone)]
struct LocalBall {
    radius: u32,
    elems: Vec<Elem>,
    layer_sizes: Vec<usize>,
    facts: Vec<(u32, Vec<usize>)>,
    incident: Vec<Vec<usize>>,
}

impl LocalBall {
    fn len(&self) -> usize {
        self.elems.len()
    }

    fn from_substructure(n: &NeighborhoodSubstructure) -> Result<Self, IndexError> {
        let [center] = n.centers[..] else {
            return Err(IndexError::NotSingleCenter(n.centers.len()));
        };
        let m = n.elements.len();
        let idx = |e: Elem| n.elements.binary_search(&e).expect("fact inside ball");
        let mut adj = vec![Vec::new(); m];
        for (_, t) in &n.facts {
            for (i, &a) in t.iter().enumerate() {
                for &b in &t[i + 1..] {
                    if a != b {
                        adj[idx(a)].push(idx(b));
                        adj[idx(b)].push(idx(a));
                    }
                }
            }
        }
        let mut dist = vec![u32::MAX; m];
        let c = idx(center);
        dist[c] = 0;
        let mut queue = std::collections::VecDeque::from([c]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut by_dist: Vec<(u32, Elem)> = (0..m).map(|i| (dist[i], n.elements[i])).collect();
        by_dist.sort_unstable();
        let elems: Vec<Elem> = by_dist.iter().map(|&(_, e)| e).collect();
        let mut layer_sizes = Vec::new();
        for &(d, _) in &by_dist {
            assert!(d != u32::MAX, "substructure is not a ball around its center");
            if d as usize >= layer_sizes.len() {
                layer_sizes.push(0);
            }
            layer_sizes[d as usize] += 1;
        }
        let local: HashMap<Elem, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let facts = n
            .facts
            .iter()
            .map(|(rel, t)| (*rel as u32, t.iter().map(|e| local[e]).collect()))
            .collect();
        Ok(Self::finish(n.radius, elems, layer_sizes, facts))
    }

    fn finish(radius: u32, elems: Vec<Elem>, layer_sizes: Vec<usize>, facts: Vec<(u32, Vec<usize>)>) -> Self {
        let mut incident = vec![Vec::new(); elems.len()];
        for (i, (_, t)) in facts.iter().enumerate() {
            let mut comps = t.clone();
            comps.sort_unstable();
            comps.dedup();
            for c in comps {
                incident[c].push(i);
            }
        }
        LocalBall { radius, elems, layer_sizes, facts, incident }
    }
}

/// Scratch space for building balls straight from the distance index.
struct BallScratch {
    local_of: Vec<u32>,
}

impl BallScratch {
    fn new(n: usize) -> Self {
        Self { local_of: vec![u32::MAX; n] }
    }

    fn ball(&mut self, s: &Structure, ix: &DistanceIndex, a: Elem, radius: u32) -> LocalBall {
        let elems = ix.ball_by_distance(a, radius).to_vec();
        for (i, &e) in elems.iter().enumerate() {
            self.local_of[e as usize] = i as u32;
        }
        let layers = (ix.layer_count(a) as u32).min(radius + 1);
        let layer_sizes = (0..layers).map(|i| ix.layer(a, i).len()).collect();
        let mut facts = Vec::new();
        for &e in &elems {
            for (rel, tuple) in s.incident(e) {
                if *tuple.iter().min().expect("non-empty tuple") != e {
                    continue;
                }
                if tuple.iter().all(|&c| self.local_of[c as usize] != u32::MAX) {
                    facts.push((rel as u32, tuple.iter().map(|&c| self.local_of[c as usize] as usize).collect()));
                }
            }
        }
        facts.sort();
        for &e in &elems {
            self.local_of[e as usize] = u32::MAX;
        }
        LocalBall::finish(radius, elems, layer_sizes, facts)
    }
}

const UNPLACED: usize = usize::MAX;
const MAX_STORED_AUTOMORPHISMS: usize = 256;

struct Frame {
    depth: usize,
    tied: Vec<usize>,
    next: usize,
    explored: Vec<usize>,
    /// Current path codes are lexicographically below the best leaf.
    below_best: bool,
    placed: Option<usize>,
}

/// Lexicographically least distance-stratified order of a ball.
struct CanonicalSearch<'b> {
    ball: &'b LocalBall,
    layer_of_pos: Vec<usize>,
    pos_of: Vec<usize>,
    order: Vec<usize>,
    codes: Vec<Vec<u32>>,
    best: Option<(Vec<usize>, Vec<Vec<u32>>)>,
    automorphisms: Vec<Vec<usize>>,
    steps: u64,
}

impl<'b> CanonicalSearch<'b> {
    fn new(ball: &'b LocalBall) -> Self {
        let mut layer_of_pos = Vec::with_capacity(ball.len());
        for (layer, &size) in ball.layer_sizes.iter().enumerate() {
            layer_of_pos.extend(std::iter::repeat_n(layer, size));
        }
        CanonicalSearch {
            ball,
            layer_of_pos,
            pos_of: vec![UNPLACED; ball.len()],
            order: Vec::with_capacity(ball.len()),
            codes: Vec::with_capacity(ball.len()),
            best: None,
            automorphisms: Vec::new(),
            steps: 0,
        }
    }

    /// Facts among placed vertices that contain `v`, with `v` put at position `p`.
    fn code(&mut self, v: usize, p: usize) -> Vec<u32> {
        self.steps += 1;
        let mut entries: Vec<Vec<u32>> = Vec::new();
        for &fi in &self.ball.incident[v] {
            let (rel, comps) = &self.ball.facts[fi];
            if comps.iter().all(|&c| c == v || self.pos_of[c] != UNPLACED) {
                let mut e = Vec::with_capacity(comps.len() + 1);
                e.push(*rel);
                e.extend(comps.iter().map(|&c| if c == v { p as u32 } else { self.pos_of[c] as u32 }));
                entries.push(e);
            }
        }
        entries.sort_unstable();
        let mut out = vec![entries.len() as u32];
        for e in entries {
            out.extend(e);
        }
        out
    }

    fn place(&mut self, v: usize, code: Vec<u32>) {
        self.pos_of[v] = self.order.len();
        self.order.push(v);
        self.codes.push(code);
    }

    fn unplace(&mut self) {
        let v = self.order.pop().expect("placed vertex");
        self.pos_of[v] = UNPLACED;
        self.codes.pop();
    }

    /// Builds the frame for the next position, or `None` when it is pruned.
    fn open_frame(&mut self, parent_below: bool) -> Option<(Frame, Vec<u32>)> {
        let depth = self.order.len();
        let layer = self.layer_of_pos[depth];
        let start: usize = self.ball.layer_sizes[..layer].iter().sum();
        let end = start + self.ball.layer_sizes[layer];
        let mut min_code: Option<Vec<u32>> = None;
        let mut tied = Vec::new();
        for v in start..end {
            if self.pos_of[v] != UNPLACED {
                continue;
            }
            let c = self.code(v, depth);
            match min_code.as_ref().map(|m| c.cmp(m)) {
                None | Some(std::cmp::Ordering::Less) => {
                    min_code = Some(c);
                    tied.clear();
                    tied.push(v);
                }
                Some(std::cmp::Ordering::Equal) => tied.push(v),
                Some(std::cmp::Ordering::Greater) => {}
            }
        }
        let min_code = min_code.expect("layer has an unplaced vertex");
        let below_best = match &self.best {
            None => true,
            Some(_) if parent_below => true,
            Some((_, best_codes)) => match min_code.cmp(&best_codes[depth]) {
                std::cmp::Ordering::Greater => return None,
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => false,
            },
        };
        Some((Frame { depth, tied, next: 0, explored: Vec::new(), below_best, placed: None }, min_code))
    }

    /// Whether `v` lies in the orbit of an explored candidate under the
    /// stored automorphisms that fix the current prefix pointwise.
    fn in_explored_orbit(&self, frame: &Frame, v: usize) -> bool {
        if frame.explored.is_empty() || self.automorphisms.is_empty() {
            return false;
        }
        let n = self.ball.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let prefix = &self.order[..frame.depth];
        let mut any = false;
        for g in &self.automorphisms {
            if prefix.iter().all(|&u| g[u] == u) {
                any = true;
                for (x, &gx) in g.iter().enumerate().take(n) {
                    let (a, b) = (find(&mut parent, x), find(&mut parent, gx));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        if !any {
            return false;
        }
        let rv = find(&mut parent, v);
        frame.explored.iter().any(|&u| find(&mut parent, u) == rv)
    }

    fn run(mut self) -> (Vec<usize>, Vec<Vec<u32>>, u64) {
        let n = self.ball.len();
        let mut stack: Vec<Frame> = Vec::new();
        let Some((root, root_code)) = self.open_frame(false) else { unreachable!("no best yet") };
        let mut pending_code: Vec<Option<Vec<u32>>> = vec![Some(root_code)];
        stack.push(root);

        while let Some(top) = stack.last_mut() {
            if let Some(v) = top.placed.take() {
                top.explored.push(v);
                self.unplace();
            }
            let top = stack.last().expect("non-empty stack");
            let mut choice = None;
            let mut idx = top.next;
            while idx < top.tied.len() {
                let v = top.tied[idx];
                idx += 1;
                if !self.in_explored_orbit(top, v) {
                    choice = Some(v);
                    break;
                }
            }
            let top = stack.last_mut().expect("non-empty stack");
            top.next = idx;
            let Some(v) = choice else {
                stack.pop();
                pending_code.pop();
                continue;
            };
            top.placed = Some(v);
            let below = top.below_best;
            let code = pending_code.last().cloned().flatten().expect("frame code");
            self.place(v, code);

            if self.order.len() < n {
                if let Some((child, child_code)) = self.open_frame(below) {
                    stack.push(child);
                    pending_code.push(Some(child_code));
                }
                continue;
            }

            // leaf
            if below || self.best.is_none() {
                self.best = Some((self.order.clone(), self.codes.clone()));
                for f in stack.iter_mut() {
                    f.below_best = false;
                }
                continue;
            }
            let (best_order, _) = self.best.as_ref().expect("best leaf");
            let mut g = vec![0usize; n];
            for i in 0..n {
                g[best_order[i]] = self.order[i];
            }
            let q = (0..n).find(|&i| best_order[i] != self.order[i]).expect("distinct leaves");
            if self.automorphisms.len() < MAX_STORED_AUTOMORPHISMS {
                self.automorphisms.push(g);
            }
            // the subtree below position q is an image of an explored one
            while stack.last().is_some_and(|f| f.depth > q) {
                let f = stack.pop().expect("frame");
                pending_code.pop();
                if f.placed.is_some() {
                    self.unplace();
                }
            }
        }
        let (order, codes) = self.best.expect("search reaches a leaf");
        (order, codes, self.steps)
    }
}

/// Result of canonicalizing one ball.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub encoding: Vec<u32>,
    /// Elements of the ball in canonical position order.
    pub order: Vec<Elem>,
    pub representative: OrderedRepresentative,
    pub search_steps: u64,
}

/// A type's representative over abstract positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedRepresentative {
    pub size: usize,
    /// Exclusive end position of each distance layer.
    pub layer_ends: Vec<usize>,
    /// Facts over positions, sorted.
    pub facts: Vec<(usize, Vec<u32>)>,
}

impl OrderedRepresentative {
    /// Distance from the center of the element at `pos`.
    pub fn layer_of(&self, pos: usize) -> usize {
        self.layer_ends.iter().position(|&end| pos < end).expect("position in range")
    }

    /// The induced representative on the first `l + 1` layers.
    pub fn truncate(&self, l: usize) -> OrderedRepresentative {
        let layers = (l + 1).min(self.layer_ends.len());
        let size = self.layer_ends[layers - 1];
        let facts = self
            .facts
            .iter()
            .filter(|(_, t)| t.iter().all(|&p| (p as usize) < size))
            .cloned()
            .collect();
        OrderedRepresentative { size, layer_ends: self.layer_ends[..layers].to_vec(), facts }
    }

    /// All-pairs distances in the Gaifman graph of the representative.
    pub fn distances(&self) -> Vec<Vec<u32>> {
        let n = self.size;
        let mut adj = vec![Vec::new(); n];
        for (_, t) in &self.facts {
            for (i, &a) in t.iter().enumerate() {
                for &b in &t[i + 1..] {
                    if a != b {
                        adj[a as usize].push(b as usize);
                        adj[b as usize].push(a as usize);
                    }
                }
            }
        }
        (0..n)
            .map(|s| {
                let mut d = vec![u32::MAX; n];
                d[s] = 0;
                let mut q = std::collections::VecDeque::from([s]);
                while let Some(u) = q.pop_front() {
                    for &v in &adj[u] {
                        if d[v] == u32::MAX {
                            d[v] = d[u] + 1;
                            q.push_back(v);
                        }
                    }
                }
                d
            })
            .collect()
    }
}

fn canonicalize(ball: &LocalBall) -> CanonicalForm {
    let (order, codes, search_steps) = CanonicalSearch::new(ball).run();
    let mut encoding = vec![ball.radius, ball.layer_sizes.len() as u32];
    encoding.extend(ball.layer_sizes.iter().map(|&s| s as u32));
    for c in &codes {
        encoding.extend_from_slice(c);
    }
    let mut pos = vec![0u32; ball.len()];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p as u32;
    }
    let mut facts: Vec<(usize, Vec<u32>)> = ball
        .facts
        .iter()
        .map(|(rel, t)| (*rel as usize, t.iter().map(|&v| pos[v]).collect()))
        .collect();
    facts.sort();
    let mut layer_ends = Vec::with_capacity(ball.layer_sizes.len());
    let mut acc = 0;
    for &s in &ball.layer_sizes {
        acc += s;
        layer_ends.push(acc);
    }
    CanonicalForm {
        encoding,
        order: order.iter().map(|&v| ball.elems[v]).collect(),
        representative: OrderedRepresentative { size: ball.len(), layer_ends, facts },
        search_steps,
    }
}

/// Canonical form of a single-center neighborhood.
pub fn canonical_form(n: &NeighborhoodSubstructure) -> Result<CanonicalForm, IndexError> {
    Ok(canonicalize(&LocalBall::from_substructure(n)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalType {
    pub id: TypeId,
    pub radius: u32,
    pub encoding: Vec<u32>,
    pub representative: OrderedRepresentative,
}

impl CanonicalType {
    pub fn size(&self) -> usize {
        self.representative.size
    }
}

/// Realized types, numbered in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct TypeRegistry {
    types: Vec<CanonicalType>,
    by_encoding: HashMap<Vec<u32>, TypeId>,
}

impl TypeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, id: TypeId) -> &CanonicalType {
        &self.types[id as usize]
    }

    pub fn types(&self) -> &[CanonicalType] {
        &self.types
    }

    fn intern(&mut self, form: &CanonicalForm) -> TypeId {
        if let Some(&id) = self.by_encoding.get(&form.encoding) {
            return id;
        }
        let id = self.types.len() as TypeId;
        self.types.push(CanonicalType {
            id,
            radius: form.encoding[0],
            encoding: form.encoding.clone(),
            representative: form.representative.clone(),
        });
        self.by_encoding.insert(form.encoding.clone(), id);
        id
    }
}

/// Type of a single-center neighborhood, registering it when new.
pub fn canonical_type(
    n: &NeighborhoodSubstructure,
    registry: &mut TypeRegistry,
) -> Result<(TypeId, CanonicalForm), IndexError> {
    let form = canonical_form(n)?;
    Ok((registry.intern(&form), form))
}

/// Per-element types, position pointers and per-type buckets.
#[derive(Debug, Clone)]
pub struct TypeIndex {
    radius: u32,
    registry: TypeRegistry,
    elem_type: Vec<TypeId>,
    ptr_start: Vec<usize>,
    ptrs: Vec<Elem>,
    buckets: Vec<Vec<Elem>>,
    bucket_pos: Vec<u32>,
    steps: u64,
}

pub fn build_type_index(s: &Structure, ix: &DistanceIndex, radius: u32) -> Result<TypeIndex, IndexError> {
    if radius > ix.depth() {
        return Err(IndexError::TooShallow { depth: ix.depth(), requested: radius });
    }
    let n = s.len();
    let mut registry = TypeRegistry::new();
    let mut elem_type = Vec::with_capacity(n);
    let mut ptr_start = Vec::with_capacity(n + 1);
    let mut ptrs = Vec::new();
    let mut steps = 0u64;
    let mut scratch = BallScratch::new(n);
    for a in s.elements() {
        let ball = scratch.ball(s, ix, a, radius);
        steps += (ball.len() + ball.facts.len()) as u64;
        let form = canonicalize(&ball);
        steps += form.search_steps;
        elem_type.push(registry.intern(&form));
        ptr_start.push(ptrs.len());
        ptrs.extend_from_slice(&form.order);
    }
    ptr_start.push(ptrs.len());

    // elements are visited in domain order, so each bucket comes out sorted
    let mut buckets = vec![Vec::new(); registry.len()];
    let mut bucket_pos = Vec::with_capacity(n);
    for a in s.elements() {
        let b = &mut buckets[elem_type[a as usize] as usize];
        bucket_pos.push(b.len() as u32);
        b.push(a);
        steps += 1;
    }
    Ok(TypeIndex { radius, registry, elem_type, ptr_start, ptrs, buckets, bucket_pos, steps })
}

impl TypeIndex {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn registry(&self) -> &TypeRegistry {
        &self.registry
    }

    pub fn num_types(&self) -> usize {
        self.registry.len()
    }

    pub fn type_of(&self, a: Elem) -> TypeId {
        self.elem_type[a as usize]
    }

    pub fn canonical(&self, t: TypeId) -> &CanonicalType {
        self.registry.get(t)
    }

    /// Entry `i` is the element at canonical position `i` of `a`'s neighborhood.
    pub fn pointers(&self, a: Elem) -> &[Elem] {
        let a = a as usize;
        &self.ptrs[self.ptr_start[a]..self.ptr_start[a + 1]]
    }

    /// Elements of type `t` in domain order.
    pub fn bucket(&self, t: TypeId) -> &[Elem] {
        &self.buckets[t as usize]
    }

    pub fn next_in_bucket(&self, a: Elem) -> Option<Elem> {
        let b = &self.buckets[self.elem_type[a as usize] as usize];
        b.get(self.bucket_pos[a as usize] as usize + 1).copied()
    }

    pub fn bucket_position(&self, a: Elem) -> usize {
        self.bucket_pos[a as usize] as usize
    }

    pub fn build_steps(&self) -> u64 {
        self.steps
    }

    /// Deterministic text dump of types, pointers and buckets.
    pub fn dump(&self, s: &Structure) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "types radius={} count={}", self.radius, self.num_types());
        for t in self.registry.types() {
            let r = &t.representative;
            let _ = write!(out, "type {} size={} layers=", t.id, r.size);
            let mut prev = 0;
            for (i, &end) in r.layer_ends.iter().enumerate() {
                let _ = write!(out, "{}{}", if i > 0 { "," } else { "" }, end - prev);
                prev = end;
            }
            out.push_str(" facts=");
            for (i, (rel, tuple)) in r.facts.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let args: Vec<String> = tuple.iter().map(u32::to_string).collect();
                let _ = write!(out, "{}({})", s.signature().name(*rel), args.join(","));
            }
            out.push('\n');
        }
        for a in s.elements() {
            let names: Vec<&str> = self.pointers(a).iter().map(|&e| s.name(e)).collect();
            let _ = writeln!(out, "elem {} type={} pointers={}", s.name(a), self.type_of(a), names.join(","));
        }
        for (t, b) in self.buckets.iter().enumerate() {
            let names: Vec<&str> = b.iter().map(|&e| s.name(e)).collect();
            let _ = writeln!(out, "bucket {t} {}", names.join(","));
        }
        out
    }
}

/// `(a, b_2, ..., b_m)` with `b_j` the element at position `positions[j-2]` of
/// `a`'s neighborhood; `None` when a position is out of range.
pub fn apply_position_sequence(ti: &TypeIndex, a: Elem, positions: &[u32]) -> Option<Vec<Elem>> {
    let ptrs = ti.pointers(a);
    let mut out = Vec::with_capacity(positions.len() + 1);
    out.push(a);
    for &p in positions {
        out.push(*ptrs.get(p as usize)?);
    }
    Some(out)
}

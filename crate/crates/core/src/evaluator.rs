//! Naive recursive evaluation of first-order formulas.
//!
//! Quantifiers range over the whole domain, so evaluating a formula of
//! quantifier depth `q` costs `O(|domain|^q)`. This is the correctness oracle
//! for the enumeration pipeline and the decision procedure behind relevance
//! tests.

use crate::error::EvalError;
use crate::formula::{Formula, Node, VarId};
use crate::structure::{Elem, Structure};

/// Partial map from variables to elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<Elem>>,
}

impl Assignment {
    pub fn empty(f: &Formula) -> Self {
        Self { values: vec![None; f.var_names().len()] }
    }

    /// Binds the free variables of `f`, in answer order, to `tuple`.
    pub fn from_tuple(f: &Formula, tuple: &[Elem]) -> Self {
        let mut a = Self::empty(f);
        for (&v, &e) in f.free_vars().iter().zip(tuple) {
            a.values[v] = Some(e);
        }
        a
    }

    /// Returns false when `name` is not a variable of `f`.
    pub fn bind(&mut self, f: &Formula, name: &str, e: Elem) -> bool {
        match f.var_names().iter().position(|n| n == name) {
            Some(v) => {
                self.values[v] = Some(e);
                true
            }
            None => false,
        }
    }

    pub fn get(&self, v: VarId) -> Option<Elem> {
        self.values[v]
    }
}

/// Reusable evaluation context that counts atomic checks.
pub struct Evaluator<'a> {
    s: &'a Structure,
    f: &'a Formula,
    env: Vec<Option<Elem>>,
    buf: Vec<Elem>,
    steps: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(s: &'a Structure, f: &'a Formula) -> Self {
        Self { s, f, env: vec![None; f.var_names().len()], buf: Vec::new(), steps: 0 }
    }

    /// Atomic formulas checked so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Truth of `f` with its free variables bound to `tuple` in answer order.
    pub fn holds(&mut self, tuple: &[Elem]) -> bool {
        debug_assert_eq!(tuple.len(), self.f.k());
        for (&v, &e) in self.f.free_vars().iter().zip(tuple) {
            self.env[v] = Some(e);
        }
        let root = self.f.root();
        self.eval(root)
    }

    pub fn holds_assignment(&mut self, asg: &Assignment) -> Result<bool, EvalError> {
        for &v in self.f.free_vars() {
            if asg.values[v].is_none() {
                return Err(EvalError::Unbound(self.f.var_name(v).to_string()));
            }
        }
        self.env.clone_from(&asg.values);
        let root = self.f.root();
        Ok(self.eval(root))
    }

    fn eval(&mut self, node: &Node) -> bool {
        match node {
            Node::Atom { rel, args } => {
                self.steps += 1;
                self.buf.clear();
                for &a in args {
                    self.buf.push(self.env[a].expect("bound variable"));
                }
                self.s.holds(*rel, &self.buf)
            }
            Node::Eq(a, b) => {
                self.steps += 1;
                self.env[*a] == self.env[*b]
            }
            Node::Not(a) => !self.eval(a),
            Node::And(a, b) => self.eval(a) && self.eval(b),
            Node::Or(a, b) => self.eval(a) || self.eval(b),
            Node::Exists(v, body) => self.quantify(*v, body, true),
            Node::Forall(v, body) => self.quantify(*v, body, false),
        }
    }

    fn quantify(&mut self, v: VarId, body: &Node, exists: bool) -> bool {
        let saved = self.env[v];
        let mut result = !exists;
        for e in 0..self.s.len() as Elem {
            self.env[v] = Some(e);
            if self.eval(body) == exists {
                result = exists;
                break;
            }
        }
        self.env[v] = saved;
        result
    }
}

pub fn evaluate(s: &Structure, f: &Formula, asg: &Assignment) -> Result<bool, EvalError> {
    Evaluator::new(s, f).holds_assignment(asg)
}

/// All answers in lexicographic domain order; `[[]]` or `[]` for sentences.
pub fn brute_enumerate(s: &Structure, f: &Formula) -> Vec<Vec<Elem>> {
    let k = f.k();
    let n = s.len() as Elem;
    let mut ev = Evaluator::new(s, f);
    let mut out = Vec::new();
    if k == 0 {
        if ev.holds(&[]) {
            out.push(Vec::new());
        }
        return out;
    }
    if n == 0 {
        return out;
    }
    let mut t = vec![0 as Elem; k];
    loop {
        if ev.holds(&t) {
            out.push(t.clone());
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < n {
                break;
            }
            t[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Signature};
    use crate::structure::tests::path3;
    use crate::structure::{load_structure, StructureBuilder};

    #[test]
    fn atoms_and_quantifiers() {
        let s = path3();
        let f = parse_formula("E(x,y)", s.signature()).unwrap();
        let mut a = Assignment::empty(&f);
        assert!(a.bind(&f, "x", 0));
        assert!(a.bind(&f, "y", 1));
        assert!(evaluate(&s, &f, &a).unwrap());

        // exists x forall y E(x,y): checked by hand, no element is E-related to all three
        let g = parse_formula("exists x forall y E(x,y)", s.signature()).unwrap();
        let manual = (0..3).any(|x| (0..3).all(|y| s.holds(0, &[x, y])));
        assert!(!manual);
        assert_eq!(evaluate(&s, &g, &Assignment::empty(&g)).unwrap(), manual);

        let id = parse_formula("x = x", s.signature()).unwrap();
        assert!(evaluate(&s, &id, &Assignment::from_tuple(&id, &[2])).unwrap());
    }

    #[test]
    fn unbound_free_variable() {
        let s = path3();
        let f = parse_formula("E(x,y)", s.signature()).unwrap();
        let mut a = Assignment::empty(&f);
        a.bind(&f, "x", 0);
        assert_eq!(evaluate(&s, &f, &a), Err(EvalError::Unbound("y".into())));
    }

    #[test]
    fn brute_examples() {
        let s = path3();
        let f = parse_formula("E(x,y)", s.signature()).unwrap();
        assert_eq!(brute_enumerate(&s, &f), vec![vec![0, 1], vec![1, 2]]);
        let eq = parse_formula("x = y", s.signature()).unwrap();
        assert_eq!(brute_enumerate(&s, &eq), vec![vec![0, 0], vec![1, 1], vec![2, 2]]);
        let ne = parse_formula("!(x = y)", s.signature()).unwrap();
        let got = brute_enumerate(&s, &ne);
        assert_eq!(got.len(), 6);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
        let sentence = parse_formula("exists x exists y E(x,y)", s.signature()).unwrap();
        assert_eq!(brute_enumerate(&s, &sentence), vec![Vec::<Elem>::new()]);
        let never = parse_formula("exists x E(x,x)", s.signature()).unwrap();
        assert!(brute_enumerate(&s, &never).is_empty());
    }

    #[test]
    fn empty_domain() {
        let s = load_structure("rel E 2\n").unwrap();
        let f = parse_formula("E(x,y)", s.signature()).unwrap();
        assert!(brute_enumerate(&s, &f).is_empty());
        let g = parse_formula("forall x E(x,x)", s.signature()).unwrap();
        assert_eq!(brute_enumerate(&s, &g).len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_structure() -> impl Strategy<Value = Structure> {
            (1usize..5, prop::collection::vec((0u32..5, 0u32..5), 0..8), prop::collection::vec(0u32..5, 0..3))
                .prop_map(|(n, edges, ps)| {
                    let sig = Signature::from_relations([("E", 2), ("P", 1)]).unwrap();
                    let mut b = StructureBuilder::new(sig).with_elements(n);
                    for (u, v) in edges {
                        if (u as usize) < n && (v as usize) < n {
                            b.add_fact(0, &[u, v]);
                        }
                    }
                    for p in ps {
                        if (p as usize) < n {
                            b.add_fact(1, &[p]);
                        }
                    }
                    b.build()
                })
        }

        proptest! {
            #[test]
            fn connective_dualities(s in small_structure(), a in 0u32..5, b in 0u32..5) {
                let n = s.len() as u32;
                let t = [a % n, b % n];
                let sig = s.signature();
                let pairs = [
                    ("!(E(x,y) & P(x))", "!E(x,y) | !P(x)"),
                    ("!(E(x,y) | P(y))", "!E(x,y) & !P(y)"),
                    ("forall z (E(x,z) | P(y))", "!exists z !(E(x,z) | P(y))"),
                    ("exists z (E(z,x) & E(z,y))", "!forall z !(E(z,x) & E(z,y))"),
                ];
                for (l, r) in pairs {
                    let fl = parse_formula(l, sig).unwrap().with_head(&["x", "y"]).unwrap();
                    let fr = parse_formula(r, sig).unwrap().with_head(&["x", "y"]).unwrap();
                    prop_assert_eq!(Evaluator::new(&s, &fl).holds(&t), Evaluator::new(&s, &fr).holds(&t));
                }
            }

            #[test]
            fn brute_output_strictly_increasing(s in small_structure()) {
                let f = parse_formula("E(x,y) | P(z) | x = z", s.signature()).unwrap();
                let out = brute_enumerate(&s, &f);
                prop_assert!(out.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}

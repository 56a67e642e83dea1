//! First-order formulas over a relational signature.
//!
//! Formulas are parsed from a small text grammar:
//!
//! ```text
//! or      := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '!' unary | 'exists' VAR unary | 'forall' VAR unary | primary
//! primary := '(' or ')' | REL '(' VAR (',' VAR)* ')' | VAR '=' VAR
//! ```
//!
//! Variables match `[a-z][a-z0-9_]*`. A quantifier body is a unary formula, so
//! `exists y (E(x,y) & P(y))` needs the parentheses while `exists y E(x,y)`
//! does not.

use std::collections::HashMap;
use std::fmt;

use crate::error::FormulaError;

/// Relation names and arities.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    relations: Vec<(String, usize)>,
    by_name: HashMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a relation and returns its id. Fails on duplicate names or arity 0.
    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<usize, FormulaError> {
        if arity == 0 {
            return Err(FormulaError::ZeroArity(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(FormulaError::DuplicateRelation(name.to_string()));
        }
        let id = self.relations.len();
        self.relations.push((name.to_string(), arity));
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn from_relations<'a>(
        rels: impl IntoIterator<Item = (&'a str, usize)>,
    ) -> Result<Self, FormulaError> {
        let mut sig = Self::new();
        for (name, arity) in rels {
            sig.add_relation(name, arity)?;
        }
        Ok(sig)
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, rel: usize) -> &str {
        &self.relations[rel].0
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.relations[rel].1
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(n, a)| (n.as_str(), *a))
    }
}

/// Index into [`Formula::var_names`].
pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Atom { rel: usize, args: Vec<VarId> },
    Eq(VarId, VarId),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Exists(VarId, Box<Node>),
    Forall(VarId, Box<Node>),
}

impl Node {
    /// Node count: atoms, equalities, connectives and quantifiers each count once.
    pub fn size(&self) -> usize {
        match self {
            Node::Atom { .. } | Node::Eq(..) => 1,
            Node::Not(a) | Node::Exists(_, a) | Node::Forall(_, a) => 1 + a.size(),
            Node::And(a, b) | Node::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Node::Atom { .. } | Node::Eq(..) => 0,
            Node::Not(a) => a.quantifier_depth(),
            Node::Exists(_, a) | Node::Forall(_, a) => 1 + a.quantifier_depth(),
            Node::And(a, b) | Node::Or(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
        }
    }
}

/// A parsed formula together with its answer-variable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    root: Node,
    var_names: Vec<String>,
    free: Vec<VarId>,
    size: usize,
}

impl Formula {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v]
    }

    /// Free variables in answer order.
    pub fn free_vars(&self) -> &[VarId] {
        &self.free
    }

    /// Names of the free variables in answer order.
    pub fn free_variables(&self) -> Vec<&str> {
        self.free.iter().map(|&v| self.var_names[v].as_str()).collect()
    }

    /// Number of free variables.
    pub fn k(&self) -> usize {
        self.free.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_sentence(&self) -> bool {
        self.free.is_empty()
    }

    /// Reorders the answer tuple. `head` must be a permutation of the free variables.
    pub fn with_head(&self, head: &[&str]) -> Result<Formula, FormulaError> {
        let mut free = Vec::with_capacity(head.len());
        for name in head {
            let v = self
                .free
                .iter()
                .copied()
                .find(|&v| self.var_names[v] == *name)
                .ok_or_else(|| FormulaError::BadHead(format!("`{name}` is not a free variable")))?;
            if free.contains(&v) {
                return Err(FormulaError::BadHead(format!("`{name}` listed twice")));
            }
            free.push(v);
        }
        if free.len() != self.free.len() {
            return Err(FormulaError::BadHead(format!(
                "head lists {} of {} free variables",
                free.len(),
                self.free.len()
            )));
        }
        Ok(Formula { free, ..self.clone() })
    }

    /// Existential closure over all free variables.
    pub fn existential_closure(&self) -> Formula {
        let mut root = self.root.clone();
        for &v in self.free.iter().rev() {
            root = Node::Exists(v, Box::new(root));
        }
        let size = root.size();
        Formula { root, var_names: self.var_names.clone(), free: Vec::new(), size }
    }

    /// Fully parenthesized text that parses back to the same formula.
    pub fn pretty(&self, sig: &Signature) -> String {
        let mut out = String::new();
        self.write_node(&self.root, sig, &mut out);
        out
    }

    fn write_node(&self, node: &Node, sig: &Signature, out: &mut String) {
        match node {
            Node::Atom { rel, args } => {
                out.push_str(sig.name(*rel));
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&self.var_names[*a]);
                }
                out.push(')');
            }
            Node::Eq(a, b) => {
                out.push_str(&self.var_names[*a]);
                out.push_str(" = ");
                out.push_str(&self.var_names[*b]);
            }
            Node::Not(a) => {
                out.push_str("!(");
                self.write_node(a, sig, out);
                out.push(')');
            }
            Node::And(a, b) | Node::Or(a, b) => {
                let op = if matches!(node, Node::And(..)) { " & " } else { " | " };
                out.push('(');
                self.write_node(a, sig, out);
                out.push_str(op);
                self.write_node(b, sig, out);
                out.push(')');
            }
            Node::Exists(v, a) | Node::Forall(v, a) => {
                out.push_str(if matches!(node, Node::Exists(..)) { "exists " } else { "forall " });
                out.push_str(&self.var_names[*v]);
                out.push_str(" (");
                self.write_node(a, sig, out);
                out.push(')');
            }
        }
    }
}

/// The locality radius used by the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalityRadius {
    pub r: u64,
    pub overridden: bool,
}

/// `2^size`, or the override when one is given.
pub fn locality_radius(f: &Formula, over: Option<u64>) -> Result<LocalityRadius, FormulaError> {
    match over {
        Some(0) => Err(FormulaError::InvalidOverride),
        Some(r) => Ok(LocalityRadius { r, overridden: true }),
        None => {
            let size = f.size();
            if size >= 64 {
                return Err(FormulaError::RadiusOverflow { size });
            }
            Ok(LocalityRadius { r: 1u64 << size, overridden: false })
        }
    }
}

/// Free variables in answer order.
pub fn free_variables(f: &Formula) -> Vec<&str> {
    f.free_variables()
}

pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, FormulaError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        at: 0,
        sig,
        var_names: Vec::new(),
        var_ids: HashMap::new(),
        scope: Vec::new(),
        free: Vec::new(),
        end: text.len(),
    };
    let root = p.parse_or()?;
    if let Some(t) = p.peek() {
        return Err(FormulaError::Syntax { pos: t.pos, msg: format!("unexpected {}", t.kind) });
    }
    let size = root.size();
    Ok(Formula { root, var_names: p.var_names, free: p.free, size })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokKind {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Bang,
    Amp,
    Pipe,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Ident(s) => write!(f, "`{s}`"),
            TokKind::LParen => f.write_str("`(`"),
            TokKind::RParen => f.write_str("`)`"),
            TokKind::Comma => f.write_str("`,`"),
            TokKind::Eq => f.write_str("`=`"),
            TokKind::Bang => f.write_str("`!`"),
            TokKind::Amp => f.write_str("`&`"),
            TokKind::Pipe => f.write_str("`|`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, FormulaError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let kind = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            ',' => TokKind::Comma,
            '=' => TokKind::Eq,
            '!' => TokKind::Bang,
            '&' => TokKind::Amp,
            '|' => TokKind::Pipe,
            c if c.is_ascii_alphabetic() => {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token { kind: TokKind::Ident(s), pos });
                continue;
            }
            other => {
                return Err(FormulaError::Syntax { pos, msg: format!("unexpected character `{other}`") })
            }
        };
        chars.next();
        out.push(Token { kind, pos });
    }
    Ok(out)
}

fn is_variable(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_lowercase())
        && cs.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        && s != "exists"
        && s != "forall"
}

struct Parser<'s> {
    tokens: Vec<Token>,
    at: usize,
    sig: &'s Signature,
    var_names: Vec<String>,
    var_ids: HashMap<String, VarId>,
    scope: Vec<VarId>,
    free: Vec<VarId>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn peek_kind(&self, off: usize) -> Option<&TokKind> {
        self.tokens.get(self.at + off).map(|t| &t.kind)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, kind: TokKind) -> Result<(), FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(FormulaError::Syntax { pos, msg: format!("expected {kind}, found {}", t.kind) }),
            None => Err(FormulaError::Syntax { pos, msg: format!("expected {kind}, found end of input") }),
        }
    }

    fn var_id(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.var_ids.get(name) {
            return v;
        }
        let v = self.var_names.len();
        self.var_names.push(name.to_string());
        self.var_ids.insert(name.to_string(), v);
        v
    }

    fn variable(&mut self) -> Result<VarId, FormulaError> {
        let pos = self.pos();
        match self.bump() {
            Some(Token { kind: TokKind::Ident(s), .. }) if is_variable(&s) => {
                let v = self.var_id(&s);
                if !self.scope.contains(&v) && !self.free.contains(&v) {
                    self.free.push(v);
                }
                Ok(v)
            }
            Some(t) => Err(FormulaError::Syntax { pos, msg: format!("expected a variable, found {}", t.kind) }),
            None => Err(FormulaError::Syntax { pos, msg: "expected a variable, found end of input".into() }),
        }
    }

    fn parse_or(&mut self) -> Result<Node, FormulaError> {
        let mut lhs = self.parse_and()?;
        while self.peek_kind(0) == Some(&TokKind::Pipe) {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = Node::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Node, FormulaError> {
        let mut lhs = self.parse_unary()?;
        while self.peek_kind(0) == Some(&TokKind::Amp) {
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Node::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Node, FormulaError> {
        match self.peek_kind(0) {
            Some(TokKind::Bang) => {
                self.bump();
                Ok(Node::Not(Box::new(self.parse_unary()?)))
            }
            Some(TokKind::Ident(s)) if s == "exists" || s == "forall" => {
                let exists = s == "exists";
                self.bump();
                let pos = self.pos();
                let name = match self.bump() {
                    Some(Token { kind: TokKind::Ident(s), .. }) if is_variable(&s) => s,
                    _ => {
                        return Err(FormulaError::Syntax {
                            pos,
                            msg: "expected a variable after quantifier".into(),
                        })
                    }
                };
                let v = self.var_id(&name);
                if self.scope.contains(&v) {
                    return Err(FormulaError::Shadowing { pos, var: name });
                }
                self.scope.push(v);
                let body = self.parse_unary();
                self.scope.pop();
                let body = Box::new(body?);
                Ok(if exists { Node::Exists(v, body) } else { Node::Forall(v, body) })
            }
            _ => self.parse_primary(),
        }
    }

    fn parse_primary(&mut self) -> Result<Node, FormulaError> {
        let pos = self.pos();
        match self.peek_kind(0).cloned() {
            Some(TokKind::LParen) => {
                self.bump();
                let inner = self.parse_or()?;
                self.expect(TokKind::RParen)?;
                Ok(inner)
            }
            Some(TokKind::Ident(name)) if self.peek_kind(1) == Some(&TokKind::LParen) => {
                self.bump();
                self.bump();
                let rel = self
                    .sig
                    .lookup(&name)
                    .ok_or_else(|| FormulaError::UnknownRelation { pos, name: name.clone() })?;
                let mut args = vec![self.variable()?];
                while self.peek_kind(0) == Some(&TokKind::Comma) {
                    self.bump();
                    args.push(self.variable()?);
                }
                self.expect(TokKind::RParen)?;
                let expected = self.sig.arity(rel);
                if args.len() != expected {
                    return Err(FormulaError::ArityMismatch { pos, name, expected, found: args.len() });
                }
                Ok(Node::Atom { rel, args })
            }
            Some(TokKind::Ident(_)) => {
                let a = self.variable()?;
                self.expect(TokKind::Eq)?;
                let b = self.variable()?;
                Ok(Node::Eq(a, b))
            }
            Some(k) => Err(FormulaError::Syntax { pos, msg: format!("unexpected {k}") }),
            None => Err(FormulaError::Syntax { pos, msg: "unexpected end of input".into() }),
        }
    }
}

//! The graph-query language.
//!
//! ```text
//! query := stmt (";" stmt)* [";"]
//! stmt  := node "-" pred "-" node
//! node  := WORD+ | "(" HANDLE (":" WORD+)? ")"
//! pred  := WORD+ | "[" WORD+ "]"
//! WORD  := [a-z0-9_]+            (input is lowercased first)
//! ```
//!
//! Multiword terms are joined with `_`. Every bare node is a fresh node; a
//! node is shared between statements only through an explicit handle, e.g.
//! `(w:woman) - eating - (c:cake); (f:frosting) - on - (c)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("handle ({0}) is never given a label")]
    DanglingHandle(String),
    #[error("handle ({handle}) labeled both {first:?} and {second:?}")]
    ConflictingLabel {
        handle: String,
        first: String,
        second: String,
    },
    #[error("statement {statement} links node ({handle}) to itself")]
    SelfLoop { statement: usize, handle: String },
    #[error("empty query")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryNode {
    pub handle: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryTriplet {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryGraph {
    /// First-appearance order.
    pub nodes: Vec<QueryNode>,
    pub triplets: Vec<QueryTriplet>,
}

impl QueryGraph {
    pub fn node(&self, handle: &str) -> Option<&QueryNode> {
        self.nodes.iter().find(|n| n.handle == handle)
    }

    pub fn label(&self, handle: &str) -> &str {
        self.node(handle)
            .map(|n| n.label.as_str())
            .unwrap_or_default()
    }
}

impl fmt::Display for QueryGraph {
    /// Canonical text form with every node written as `(handle:label)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.triplets.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(
                f,
                "({}:{}) - [{}] - ({}:{})",
                t.subject,
                self.label(&t.subject),
                t.predicate,
                t.object,
                self.label(&t.object)
            )?;
        }
        Ok(())
    }
}

/// A query position that an image node or predicate can be grounded to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Slot {
    /// A query node, by handle.
    Node(String),
    /// The predicate of canonical triplet `i`.
    Predicate(usize),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Node(h) => write!(f, "({h})"),
            Slot::Predicate(i) => write!(f, "[T{}]", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CanonicalTriplet {
    pub index: usize,
    pub subject_handle: String,
    pub subject_label: String,
    pub predicate_label: String,
    pub object_handle: String,
    pub object_label: String,
    pub component: usize,
}

impl CanonicalTriplet {
    pub fn subject_slot(&self) -> Slot {
        Slot::Node(self.subject_handle.clone())
    }

    pub fn predicate_slot(&self) -> Slot {
        Slot::Predicate(self.index)
    }

    pub fn object_slot(&self) -> Slot {
        Slot::Node(self.object_handle.clone())
    }

    pub fn slots(&self) -> [Slot; 3] {
        [
            self.subject_slot(),
            self.predicate_slot(),
            self.object_slot(),
        ]
    }
}

impl fmt::Display for CanonicalTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "T{}: {} - {} - {}",
            self.index + 1,
            self.subject_label,
            self.predicate_label,
            self.object_label
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Dash,
    Open,
    Close,
    Colon,
    OpenBracket,
    CloseBracket,
    Semi,
}

fn describe(tok: Option<&(usize, Tok)>) -> String {
    match tok {
        None => "end of input".into(),
        Some((_, Tok::Word(w))) => format!("word {w:?}"),
        Some((_, t)) => format!(
            "{:?}",
            match t {
                Tok::Dash => "-",
                Tok::Open => "(",
                Tok::Close => ")",
                Tok::Colon => ":",
                Tok::OpenBracket => "[",
                Tok::CloseBracket => "]",
                Tok::Semi => ";",
                Tok::Word(_) => unreachable!(),
            }
        ),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let column = text[..pos].chars().count() + 1;
        let single = match c {
            '-' => Some(Tok::Dash),
            '(' => Some(Tok::Open),
            ')' => Some(Tok::Close),
            ':' => Some(Tok::Colon),
            '[' => Some(Tok::OpenBracket),
            ']' => Some(Tok::CloseBracket),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((column, tok));
            chars.next();
        } else if c.is_whitespace() {
            chars.next();
        } else if c.is_alphanumeric() || c == '_' {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_alphanumeric() || c == '_' {
                    word.extend(c.to_lowercase());
                    chars.next();
                } else {
                    break;
                }
            }
            if !word
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
            {
                return Err(ParseError::Syntax {
                    column,
                    message: format!("invalid word {word:?}"),
                });
            }
            out.push((column, Tok::Word(word)));
        } else {
            return Err(ParseError::Syntax {
                column,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

enum NodeRef {
    Bare(String),
    Handle {
        handle: String,
        label: Option<String>,
    },
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(c, _)| *c)
            .unwrap_or(self.end_column)
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            column: self.column(),
            message: format!(
                "expected {expected}, found {}",
                describe(self.toks.get(self.pos))
            ),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn words(&mut self, what: &str) -> Result<String, ParseError> {
        let mut words = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            words.push(w.clone());
            self.pos += 1;
        }
        if words.is_empty() {
            return self.error(what);
        }
        Ok(words.join("_"))
    }

    fn node(&mut self) -> Result<NodeRef, ParseError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.pos += 1;
                let handle = match self.peek() {
                    Some(Tok::Word(w)) => w.clone(),
                    _ => return self.error("a handle"),
                };
                self.pos += 1;
                let label = if self.peek() == Some(&Tok::Colon) {
                    self.pos += 1;
                    Some(self.words("a node label")?)
                } else {
                    None
                };
                self.expect(Tok::Close, "\")\"")?;
                Ok(NodeRef::Handle { handle, label })
            }
            Some(Tok::Word(_)) => Ok(NodeRef::Bare(self.words("a node")?)),
            _ => self.error("a node"),
        }
    }

    fn predicate(&mut self) -> Result<String, ParseError> {
        if self.peek() == Some(&Tok::OpenBracket) {
            self.pos += 1;
            let label = self.words("a predicate")?;
            self.expect(Tok::CloseBracket, "\"]\"")?;
            Ok(label)
        } else {
            self.words("a predicate")
        }
    }

    fn statement(&mut self) -> Result<(NodeRef, String, NodeRef), ParseError> {
        let subject = self.node()?;
        self.expect(Tok::Dash, "\"-\"")?;
        let predicate = self.predicate()?;
        self.expect(Tok::Dash, "\"-\"")?;
        let object = self.node()?;
        Ok((subject, predicate, object))
    }
}

pub fn parse_query(text: &str) -> Result<QueryGraph, ParseError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end_column: text.chars().count() + 1,
    };
    let mut statements = vec![parser.statement()?];
    while parser.peek() == Some(&Tok::Semi) {
        parser.pos += 1;
        if parser.peek().is_none() {
            break;
        }
        statements.push(parser.statement()?);
    }
    if parser.peek().is_some() {
        return parser.error("\";\" or end of input");
    }

    // Pass 1: explicit handles and their labels.
    let mut labels: HashMap<String, String> = HashMap::new();
    let mut explicit: HashSet<String> = HashSet::new();
    for (s, _, o) in &statements {
        for node in [s, o] {
            if let NodeRef::Handle { handle, label } = node {
                explicit.insert(handle.clone());
                if let Some(label) = label {
                    match labels.get(handle) {
                        Some(existing) if existing != label => {
                            return Err(ParseError::ConflictingLabel {
                                handle: handle.clone(),
                                first: existing.clone(),
                                second: label.clone(),
                            })
                        }
                        Some(_) => {}
                        None => {
                            labels.insert(handle.clone(), label.clone());
                        }
                    }
                }
            }
        }
    }
    if let Some(h) = statements
        .iter()
        .flat_map(|(s, _, o)| [s, o])
        .find_map(|n| match n {
            NodeRef::Handle { handle, .. } if !labels.contains_key(handle) => Some(handle.clone()),
            _ => None,
        })
    {
        return Err(ParseError::DanglingHandle(h));
    }

    // Pass 2: fresh handles for bare nodes, nodes in first-appearance order.
    let mut fresh = 0usize;
    let mut next_handle = || loop {
        fresh += 1;
        let candidate = format!("n{fresh}");
        if !explicit.contains(&candidate) {
            return candidate;
        }
    };
    let mut nodes: Vec<QueryNode> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut triplets = Vec::with_capacity(statements.len());
    for (i, (s, p, o)) in statements.into_iter().enumerate() {
        let mut resolve = |node: NodeRef| match node {
            NodeRef::Bare(label) => {
                let handle = next_handle();
                seen.insert(handle.clone());
                nodes.push(QueryNode {
                    handle: handle.clone(),
                    label,
                });
                handle
            }
            NodeRef::Handle { handle, .. } => {
                if seen.insert(handle.clone()) {
                    nodes.push(QueryNode {
                        handle: handle.clone(),
                        label: labels[&handle].clone(),
                    });
                }
                handle
            }
        };
        let subject = resolve(s);
        let object = resolve(o);
        if subject == object {
            return Err(ParseError::SelfLoop {
                statement: i + 1,
                handle: subject,
            });
        }
        triplets.push(QueryTriplet {
            subject,
            predicate: p,
            object,
        });
    }
    Ok(QueryGraph { nodes, triplets })
}

/// Splits the query into canonical triplets, numbering connected components
/// (over shared handles) in order of first appearance.
pub fn canonical_forms(query: &QueryGraph) -> Vec<CanonicalTriplet> {
    let index: HashMap<&str, usize> = query
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.handle.as_str(), i))
        .collect();
    let mut parent: Vec<usize> = (0..query.nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in &query.triplets {
        let a = find(&mut parent, index[t.subject.as_str()]);
        let b = find(&mut parent, index[t.object.as_str()]);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut component_ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(query.triplets.len());
    for (i, t) in query.triplets.iter().enumerate() {
        let root = find(&mut parent, index[t.subject.as_str()]);
        let next = component_ids.len();
        let component = *component_ids.entry(root).or_insert(next);
        out.push(CanonicalTriplet {
            index: i,
            subject_handle: t.subject.clone(),
            subject_label: query.label(&t.subject).to_owned(),
            predicate_label: t.predicate.clone(),
            object_handle: t.object.clone(),
            object_label: query.label(&t.object).to_owned(),
            component,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_query() {
        let q = parse_query("girl - eating - cake").unwrap();
        assert_eq!(q.nodes.len(), 2);
        assert_eq!(q.triplets.len(), 1);
        assert_eq!(
            q.nodes[0],
            QueryNode {
                handle: "n1".into(),
                label: "girl".into()
            }
        );
        assert_eq!(q.triplets[0].predicate, "eating");
        let forms = canonical_forms(&q);
        assert_eq!(forms.len(), 1);
        assert_eq!(forms[0].component, 0);
    }

    #[test]
    fn shared_object() {
        let q = parse_query("(w:woman) - eating - (c:cake); (f:frosting) - on - (c)").unwrap();
        assert_eq!(q.nodes.len(), 3);
        assert_eq!(q.triplets.len(), 2);
        assert_eq!(q.triplets[0].object, "c");
        assert_eq!(q.triplets[1].object, "c");
        let forms = canonical_forms(&q);
        assert_eq!(forms[0].component, forms[1].component);
        assert_eq!(forms[1].object_label, "cake");
    }

    #[test]
    fn independent_subgraphs() {
        let q =
            parse_query("(g:girl) - wears - skirt; (g) - by - man; truck - on - grass").unwrap();
        let forms = canonical_forms(&q);
        let comps: Vec<usize> = forms.iter().map(|t| t.component).collect();
        assert_eq!(comps, vec![0, 0, 1]);
        let q = parse_query("a - x - b; c - y - d").unwrap();
        let comps: Vec<usize> = canonical_forms(&q).iter().map(|t| t.component).collect();
        assert_eq!(comps, vec![0, 1]);
    }

    #[test]
    fn bare_words_are_distinct_nodes() {
        let q = parse_query("girl - likes - girl").unwrap();
        assert_eq!(q.nodes.len(), 2);
        assert_ne!(q.triplets[0].subject, q.triplets[0].object);
    }

    #[test]
    fn multiword_terms_and_brackets() {
        let q = parse_query("Fire Engine - [next to] - (s:Busy Street);").unwrap();
        assert_eq!(q.nodes[0].label, "fire_engine");
        assert_eq!(q.triplets[0].predicate, "next_to");
        assert_eq!(q.label("s"), "busy_street");
        let q = parse_query("man - sitting on - bench").unwrap();
        assert_eq!(q.triplets[0].predicate, "sitting_on");
    }

    #[test]
    fn fresh_handles_avoid_user_handles() {
        let q = parse_query("girl - x - (n1:cake)").unwrap();
        assert_eq!(q.nodes[0].handle, "n2");
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_query("(a:girl) - wears - (b)"),
            Err(ParseError::DanglingHandle("b".into()))
        );
        match parse_query("girl -- cake") {
            Err(ParseError::Syntax { column, .. }) => assert_eq!(column, 7),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_query("girl - eating"),
            Err(ParseError::Syntax { column: 14, .. })
        ));
        assert!(matches!(
            parse_query("girl & cake"),
            Err(ParseError::Syntax { column: 6, .. })
        ));
        assert_eq!(parse_query("   "), Err(ParseError::Empty));
        assert!(matches!(
            parse_query("(a:girl) - likes - (a)"),
            Err(ParseError::SelfLoop { statement: 1, .. })
        ));
        assert!(matches!(
            parse_query("(a:girl) - x - (b:cake); (a:woman) - y - (b)"),
            Err(ParseError::ConflictingLabel { .. })
        ));
        assert!(matches!(
            parse_query("a - b - c d e ) "),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_query("(:girl) - b - c"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_query("a - [] - c"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_query("a - b - c;;"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn pretty_print_reparses() {
        let q = parse_query("(w:woman) - eating - (c:cake); frosting - on top of - (c)").unwrap();
        let text = q.to_string();
        assert_eq!(
            text,
            "(w:woman) - [eating] - (c:cake); (n1:frosting) - [on_top_of] - (c:cake)"
        );
        assert_eq!(parse_query(&text).unwrap(), q);
    }

    /// Union-find free oracle: repeated relaxation of component labels.
    fn components_oracle(q: &QueryGraph) -> usize {
        let mut label: HashMap<&str, usize> = q
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.handle.as_str(), i))
            .collect();
        loop {
            let mut changed = false;
            for t in &q.triplets {
                let (a, b) = (label[t.subject.as_str()], label[t.object.as_str()]);
                let m = a.min(b);
                for h in [t.subject.as_str(), t.object.as_str()] {
                    if label[h] != m {
                        label.insert(h, m);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        q.triplets
            .iter()
            .map(|t| label[t.subject.as_str()])
            .collect::<HashSet<_>>()
            .len()
    }

    fn arb_query() -> impl Strategy<Value = String> {
        let node = prop_oneof![
            (0usize..5).prop_map(|h| format!("(h{h}:w{h})")),
            "[a-z]{1,5}".prop_map(|w| w),
        ];
        let stmt = (node.clone(), "[a-z]{1,4}( [a-z]{1,3})?", node)
            .prop_map(|(s, p, o)| format!("{s} - {p} - {o}"));
        prop::collection::vec(stmt, 1..6).prop_map(|v| v.join("; "))
    }

    proptest! {
        #[test]
        fn parse_properties(text in arb_query()) {
            match parse_query(&text) {
                Ok(q) => {
                    prop_assert_eq!(parse_query(&text).unwrap(), q.clone());
                    let reparsed = parse_query(&q.to_string()).unwrap();
                    prop_assert_eq!(&reparsed, &q);
                    let forms = canonical_forms(&q);
                    prop_assert_eq!(forms.len(), q.triplets.len());
                    let comps: HashSet<usize> = forms.iter().map(|f| f.component).collect();
                    prop_assert_eq!(comps.len(), components_oracle(&q));
                }
                Err(ParseError::SelfLoop { .. }) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}

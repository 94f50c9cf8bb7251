//! Removal of surface sugar: every definition gets a label, every exception
//! names its parent, and each variable's definitions are assembled into a
//! single default expression following the exception tree.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use indexmap::IndexMap;

use crate::error::{Error, ErrorKind, Result};
use crate::pos::Pos;
use crate::surface::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDef {
    pub variable: SurfaceLoc,
    pub label: String,
    pub param: Option<Spanned<Ident>>,
    pub justification: Expr,
    pub consequence: Consequence,
    pub parent: Option<String>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefaultTree {
    pub def: LabeledDef,
    pub children: Vec<DefaultTree>,
}

impl DefaultTree {
    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(DefaultTree::depth).max().unwrap_or(0)
    }
}

/// `<d1, ..., dn | C :- D>` over surface expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefaultExpr {
    pub exceptions: Vec<DefaultExpr>,
    pub justification: Expr,
    pub consequence: Consequence,
    pub label: String,
    pub param: Option<Spanned<Ident>>,
    pub pos: Pos,
}

pub fn synthetic_label(scope: &str, var: &SurfaceLoc) -> String {
    match &var.subscope {
        Some(s) => format!("__label_{scope}_{s}_{}", var.var),
        None => format!("__label_{scope}_{}", var.var),
    }
}

fn child_label(scope: &str, var: &SurfaceLoc, k: usize) -> String {
    format!("{}__{k}", synthetic_label(scope, var))
}

fn lit_true(pos: &Pos) -> Expr {
    mk(ExprKind::Bool(true), pos.clone())
}

fn as_definition(item: &Item) -> (Option<&Spanned<Ident>>, Expr, Consequence) {
    match &item.body {
        ItemBody::Rule {
            param,
            condition,
            fulfilled,
            target,
        } => (
            param.as_ref(),
            condition.clone().unwrap_or_else(|| lit_true(&target.pos)),
            Consequence::Expr(mk(ExprKind::Bool(*fulfilled), item.pos.clone())),
        ),
        ItemBody::Definition {
            param,
            condition,
            consequence,
            target,
        } => (
            param.as_ref(),
            condition.clone().unwrap_or_else(|| lit_true(&target.pos)),
            consequence.clone(),
        ),
    }
}

/// Rewrites the items of one scope into fully labeled definitions. Output
/// is grouped by variable (in order of first appearance), source order
/// within a variable, synthetic roots first.
pub fn apply_sugar(scope: &str, items: &[&Item]) -> Result<Vec<LabeledDef>> {
    let mut by_var: IndexMap<SurfaceLoc, Vec<&Item>> = IndexMap::new();
    for item in items {
        by_var
            .entry(item.body.target().node.clone())
            .or_default()
            .push(item);
    }

    let mut seen_labels: HashMap<&str, &Pos> = HashMap::new();
    for item in items {
        if let Some(l) = &item.label {
            if let Some(prev) = seen_labels.insert(&l.node, &l.pos) {
                return Err(Error::new(ErrorKind::DuplicateLabel, "Duplicate label")
                    .with_message(format!("label \"{}\" is defined twice in scope {scope}", l.node))
                    .with_pos(Some("First definition"), prev)
                    .with_pos(Some("Second definition"), &l.pos));
            }
        }
    }

    let mut out = Vec::new();
    for (var, items) in &by_var {
        out.extend(sugar_variable(scope, var, items, &seen_labels)?);
    }
    Ok(out)
}

fn sugar_variable(
    scope: &str,
    var: &SurfaceLoc,
    items: &[&Item],
    all_labels: &HashMap<&str, &Pos>,
) -> Result<Vec<LabeledDef>> {
    let root_label = synthetic_label(scope, var);
    let own_labels: HashSet<&str> = items
        .iter()
        .filter_map(|i| i.label.as_ref().map(|l| l.node.as_str()))
        .collect();
    let has_rule = items.iter().any(|i| matches!(i.body, ItemBody::Rule { .. }));
    let bases: Vec<&Item> = items.iter().copied().filter(|i| i.exception.is_none()).collect();

    let claim_synthetic = |pos: &Pos| -> Result<()> {
        match all_labels.get(root_label.as_str()) {
            Some(user) => Err(Error::new(ErrorKind::DuplicateLabel, "Duplicate label")
                .with_message(format!(
                    "label \"{root_label}\" is reserved for the default definition of {var}"
                ))
                .with_pos(Some("User label"), user)
                .with_pos(Some("Definition"), pos)),
            None => Ok(()),
        }
    };

    let mut out = Vec::new();
    // Parent label attached to non-exception items, and the label bare
    // `exception` items attach to.
    let (base_parent, bare_target): (Option<String>, Option<String>) = if has_rule {
        // (i): a `false` root inserted once; rules and plain definitions hang below it.
        let first = items[0];
        claim_synthetic(&first.pos)?;
        out.push(LabeledDef {
            variable: var.clone(),
            label: root_label.clone(),
            param: first.body.param().cloned(),
            justification: lit_true(&first.body.target().pos),
            consequence: Consequence::Expr(mk(ExprKind::Bool(false), first.body.target().pos.clone())),
            parent: None,
            pos: first.body.target().pos.clone(),
        });
        (Some(root_label.clone()), Some(root_label.clone()))
    } else if bases.len() > 1 {
        // (iiia): several base definitions become exceptions to a `nodefault` root.
        if let Some(labeled) = bases.iter().find(|i| i.label.is_some()) {
            let mut err = Error::new(ErrorKind::MultipleRoots, "Multiple base definitions")
                .with_message(format!(
                    "variable {var} has several definitions that are not exceptions, and one of them carries label \"{}\"; mark the others as exceptions or remove the label",
                    labeled.label.as_ref().unwrap().node
                ));
            for b in &bases {
                err = err.with_pos(None, &b.pos);
            }
            return Err(err);
        }
        if let Some(bare) = items.iter().find(|i| matches!(i.exception, Some(None))) {
            let mut err = Error::new(ErrorKind::AmbiguousException, "Ambiguous exception")
                .with_message(format!(
                    "this exception to {var} could apply to any of {} definitions; add a label to the one it refines",
                    bases.len()
                ))
                .with_pos(Some("Exception"), &bare.pos);
            for b in &bases {
                err = err.with_pos(Some("Candidate"), &b.pos);
            }
            return Err(err);
        }
        let first = bases[0];
        claim_synthetic(&first.pos)?;
        out.push(LabeledDef {
            variable: var.clone(),
            label: root_label.clone(),
            param: first.body.param().cloned(),
            justification: lit_true(&first.body.target().pos),
            consequence: Consequence::Empty,
            parent: None,
            pos: first.body.target().pos.clone(),
        });
        (Some(root_label.clone()), None)
    } else if let Some(base) = bases.first() {
        // (iiib): the single base definition is the root.
        let label = match &base.label {
            Some(l) => l.node.clone(),
            None => {
                claim_synthetic(&base.pos)?;
                root_label.clone()
            }
        };
        (None, Some(label))
    } else {
        let mut err = Error::new(ErrorKind::MultipleRoots, "No base definition")
            .with_message(format!("every definition of {var} is an exception; one must be the base case"));
        for i in items {
            err = err.with_pos(None, &i.pos);
        }
        return Err(err);
    };

    for (k, item) in items.iter().enumerate() {
        let (param, justification, consequence) = as_definition(item);
        let parent = match &item.exception {
            None => base_parent.clone(),
            Some(None) => match &bare_target {
                Some(t) => Some(t.clone()),
                None => unreachable!("ambiguous bare exceptions are rejected above"),
            },
            Some(Some(l)) => {
                if !own_labels.contains(l.node.as_str()) && !(has_rule && l.node == root_label) {
                    let mut err = Error::at(ErrorKind::UnknownLabel, "Unknown label", &l.pos)
                        .with_message(format!("no definition of {var} carries label \"{}\"", l.node));
                    if all_labels.contains_key(l.node.as_str()) {
                        err = err.with_pos(Some("Label defined for another variable"), all_labels[l.node.as_str()]);
                    }
                    return Err(err);
                }
                Some(l.node.clone())
            }
        };
        let label = match &item.label {
            Some(l) => l.node.clone(),
            None if parent.is_none() => bare_target.clone().unwrap(),
            None => child_label(scope, var, k + 1),
        };
        out.push(LabeledDef {
            variable: var.clone(),
            label,
            param: param.cloned(),
            justification,
            consequence,
            parent,
            pos: item.pos.clone(),
        });
    }
    Ok(out)
}

/// Builds the exception tree of one variable.
pub fn build_tree(defs: &[LabeledDef]) -> Result<DefaultTree> {
    let index: HashMap<&str, usize> = defs.iter().enumerate().map(|(i, d)| (d.label.as_str(), i)).collect();
    // Follow parent links; revisiting a node on the current walk is a cycle.
    for start in 0..defs.len() {
        let mut walk = vec![start];
        let mut cur = start;
        while let Some(p) = &defs[cur].parent {
            let Some(&next) = index.get(p.as_str()) else { break };
            if let Some(at) = walk.iter().position(|&w| w == next) {
                let mut err = Error::new(ErrorKind::LabelCycle, "Cycle in exceptions")
                    .with_message(format!(
                        "the exceptions of {} refer to each other in a loop",
                        defs[start].variable
                    ));
                for &i in &walk[at..] {
                    err = err.with_pos(Some(&format!("label {}", defs[i].label)), &defs[i].pos);
                }
                return Err(err);
            }
            walk.push(next);
            cur = next;
        }
    }
    let roots: Vec<usize> = (0..defs.len()).filter(|&i| defs[i].parent.is_none()).collect();
    if roots.len() != 1 {
        let var = defs.first().map(|d| d.variable.to_string()).unwrap_or_default();
        let mut err = Error::new(ErrorKind::MultipleRoots, "Multiple base definitions")
            .with_message(format!("variable {var} must have exactly one base definition, found {}", roots.len()));
        for &r in &roots {
            err = err.with_pos(None, &defs[r].pos);
        }
        return Err(err);
    }
    let mut children: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, d) in defs.iter().enumerate() {
        if let Some(p) = &d.parent {
            children.entry(p.as_str()).or_default().push(i);
        }
    }
    fn node(i: usize, defs: &[LabeledDef], children: &HashMap<&str, Vec<usize>>) -> DefaultTree {
        DefaultTree {
            def: defs[i].clone(),
            children: children
                .get(defs[i].label.as_str())
                .map(|cs| cs.iter().map(|&c| node(c, defs, children)).collect())
                .unwrap_or_default(),
        }
    }
    Ok(node(roots[0], defs, &children))
}

pub fn materialize(tree: &DefaultTree) -> DefaultExpr {
    DefaultExpr {
        exceptions: tree.children.iter().map(materialize).collect(),
        justification: tree.def.justification.clone(),
        consequence: tree.def.consequence.clone(),
        label: tree.def.label.clone(),
        param: tree.def.param.clone(),
        pos: tree.def.pos.clone(),
    }
}

impl fmt::Display for DefaultExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, e) in self.exceptions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{e}")?;
        }
        if !self.exceptions.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "| {} :- ", self.justification.node)?;
        match &self.consequence {
            Consequence::Expr(e) => write!(f, "{}>", e.node),
            Consequence::Empty => f.write_str("∅>"),
        }
    }
}

/// One variable after desugaring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesugaredVar {
    pub variable: SurfaceLoc,
    pub defs: Vec<LabeledDef>,
    pub default: DefaultExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesugaredScope {
    pub scope: String,
    pub vars: Vec<DesugaredVar>,
}

/// Desugars every scope that has definitions, in order of first use.
pub fn desugar_program(prog: &SurfaceProgram) -> Result<Vec<DesugaredScope>> {
    let mut by_scope: IndexMap<&str, Vec<&Item>> = IndexMap::new();
    for u in &prog.uses {
        by_scope.entry(u.scope.node.as_str()).or_default().extend(u.items.iter());
    }
    let mut out = Vec::new();
    for (scope, items) in by_scope {
        let defs = apply_sugar(scope, &items)?;
        let mut grouped: IndexMap<SurfaceLoc, Vec<LabeledDef>> = IndexMap::new();
        for d in defs {
            grouped.entry(d.variable.clone()).or_default().push(d);
        }
        let mut vars = Vec::new();
        for (variable, defs) in grouped {
            let tree = build_tree(&defs)?;
            vars.push(DesugaredVar {
                variable,
                default: materialize(&tree),
                defs,
            });
        }
        out.push(DesugaredScope {
            scope: scope.to_owned(),
            vars,
        });
    }
    Ok(out)
}

/// Stable textual dump: one labeled definition per line, then the
/// materialized default of each variable.
pub fn print_desugared(scopes: &[DesugaredScope]) -> String {
    let mut s = String::new();
    for sc in scopes {
        let _ = writeln!(s, "scope {}:", sc.scope);
        for v in &sc.vars {
            for d in &v.defs {
                let _ = write!(
                    s,
                    "  def {} label {} parent {} at {}",
                    d.variable,
                    d.label,
                    d.parent.as_deref().unwrap_or("-"),
                    d.pos
                );
                if let Some(p) = &d.param {
                    let _ = write!(s, " of {}", p.node);
                }
                let _ = write!(s, " : under condition {} consequence ", d.justification.node);
                match &d.consequence {
                    Consequence::Expr(e) => {
                        let _ = writeln!(s, "equals {}", e.node);
                    }
                    Consequence::Empty => s.push_str("nodefault\n"),
                }
            }
            let _ = writeln!(s, "  {} = {}", v.variable, v.default);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::literate::extract_blocks;
    use crate::parser::parse;

    fn desugar_src(code: &str) -> Result<Vec<DesugaredScope>> {
        let doc = extract_blocks("t", &format!("```catala\n{code}```\n"))?;
        desugar_program(&parse(&doc)?)
    }

    fn default_of(code: &str) -> String {
        desugar_src(code).unwrap()[0].vars[0].default.to_string()
    }

    #[test]
    fn rule_gets_false_root() {
        assert_eq!(
            default_of("scope S:\n rule r under condition b consequence fulfilled\n"),
            "<<| b :- true> | true :- false>"
        );
    }

    #[test]
    fn single_definition_is_root() {
        let ds = desugar_src("scope S:\n definition x equals 5\n").unwrap();
        let v = &ds[0].vars[0];
        assert_eq!(v.defs.len(), 1);
        assert_eq!(v.defs[0].label, "__label_S_x");
        assert_eq!(v.default.to_string(), "<| true :- 5>");
    }

    #[test]
    fn several_definitions_get_nodefault_root() {
        assert_eq!(
            default_of(
                "scope S:\n definition x under condition c1 consequence equals 1\n definition x under condition c2 consequence equals 2\n"
            ),
            "<<| c1 :- 1>, <| c2 :- 2> | true :- ∅>"
        );
    }

    #[test]
    fn bare_exception_targets_single_base() {
        assert_eq!(
            default_of("scope S:\n exception definition x under condition c consequence equals 2\n definition x equals 1\n"),
            "<<| c :- 2> | true :- 1>"
        );
    }

    #[test]
    fn exceptions_to_exceptions() {
        let ds = desugar_src(
            "scope S:\n label a definition x equals 1\n label b exception a definition x under condition c consequence equals 2\n exception b definition x under condition d consequence equals 3\n",
        )
        .unwrap();
        assert_eq!(ds[0].vars[0].default.to_string(), "<<<| d :- 3> | c :- 2> | true :- 1>");
    }

    #[test]
    fn errors() {
        let amb = desugar_src(
            "scope S:\n definition x under condition a consequence equals 1\n definition x under condition b consequence equals 2\n exception definition x equals 3\n",
        )
        .unwrap_err();
        assert_eq!(amb.kind, ErrorKind::AmbiguousException);
        let unknown = desugar_src("scope S:\n definition x equals 1\n exception nope definition x equals 3\n").unwrap_err();
        assert_eq!(unknown.kind, ErrorKind::UnknownLabel);
        let dup = desugar_src("scope S:\n label a definition x equals 1\n label a definition y equals 3\n").unwrap_err();
        assert_eq!(dup.kind, ErrorKind::DuplicateLabel);
        let roots = desugar_src("scope S:\n label a definition x equals 1\n definition x equals 3\n").unwrap_err();
        assert_eq!(roots.kind, ErrorKind::MultipleRoots);
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let base = desugar_src("scope S:\n label a definition x equals 1\n").unwrap()[0].vars[0].defs[0].clone();
        let mut looped = base.clone();
        looped.label = "b".into();
        looped.parent = Some("b".into());
        assert_eq!(build_tree(&[base, looped]).unwrap_err().kind, ErrorKind::LabelCycle);
    }
}

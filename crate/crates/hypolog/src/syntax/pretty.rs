//! Source-syntax printing. Output parses back to the same structure.

use super::ast::*;
use crate::sym::Sym;
use std::fmt::Write;

fn var_name(v: VarId, names: &[Option<Sym>]) -> String {
    match names.get(v as usize) {
        Some(Some(s)) => s.name().to_string(),
        // an anonymous variable has exactly one occurrence, so `_`
        // survives a reparse
        Some(None) => "_".to_string(),
        None => format!("_G{v}"),
    }
}

fn ident_needs_quotes(s: &str) -> bool {
    let mut it = s.chars();
    match it.next() {
        Some(c) if c.is_ascii_lowercase() => {
            it.any(|c| !(c.is_ascii_alphanumeric() || c == '_'))
        }
        _ => true,
    }
}

fn push_ident(out: &mut String, s: &str) {
    if ident_needs_quotes(s) {
        let _ = write!(out, "'{s}'");
    } else {
        out.push_str(s);
    }
}

fn push_float(out: &mut String, f: f64) {
    if f == f.trunc() && f.is_finite() {
        let _ = write!(out, "{f:.1}");
    } else {
        let _ = write!(out, "{f}");
    }
}

pub fn term_to_string(t: &Term, names: &[Option<Sym>]) -> String {
    let mut out = String::new();
    push_term(&mut out, t, names);
    out
}

fn push_term(out: &mut String, t: &Term, names: &[Option<Sym>]) {
    match t {
        Term::Var(v) => out.push_str(&var_name(*v, names)),
        Term::Const(s) => push_ident(out, s.name()),
        Term::Num(Num::Int(i)) => {
            let _ = write!(out, "{i}");
        }
        Term::Num(Num::Float(f)) => push_float(out, *f),
        Term::Comp(f, args) if f.name() == "." && args.len() == 2 => {
            push_list(out, &args[0], &args[1], names)
        }
        Term::Comp(f, args)
            if args.len() == 2 && matches!(f.name(), "+" | "-" | "*" | "//") =>
        {
            out.push('(');
            push_term(out, &args[0], names);
            out.push_str(f.name());
            push_term(out, &args[1], names);
            out.push(')');
        }
        Term::Comp(f, args) if args.len() == 1 && f.name() == "-" => {
            out.push_str("(- ");
            push_term(out, &args[0], names);
            out.push(')');
        }
        Term::Comp(f, args) => {
            push_ident(out, f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                push_term(out, a, names);
            }
            out.push(')');
        }
        Term::Ctx(c) => {
            let _ = write!(out, "{c}");
        }
    }
}

fn push_list(out: &mut String, head: &Term, tail: &Term, names: &[Option<Sym>]) {
    out.push('[');
    push_term(out, head, names);
    let mut cur = tail;
    loop {
        match cur {
            Term::Comp(f, args) if f.name() == "." && args.len() == 2 => {
                out.push_str(", ");
                push_term(out, &args[0], names);
                cur = &args[1];
            }
            Term::Const(s) if s.name() == "[]" => break,
            other => {
                out.push_str(" | ");
                push_term(out, other, names);
                break;
            }
        }
    }
    out.push(']');
}

pub fn atom_to_string(a: &Atom, names: &[Option<Sym>]) -> String {
    let mut out = String::new();
    push_atom(&mut out, a, names);
    out
}

fn push_atom(out: &mut String, a: &Atom, names: &[Option<Sym>]) {
    push_ident(out, a.pred.name());
    if !a.args.is_empty() {
        out.push('(');
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            push_term(out, t, names);
        }
        out.push(')');
    }
}

fn push_builtin(out: &mut String, a: &Atom, names: &[Option<Sym>]) {
    match (a.pred.name(), a.args.len()) {
        ("=" | "\\=" | "is" | "<" | ">" | "=<" | ">=", 2) => {
            push_term(out, &a.args[0], names);
            let _ = write!(out, " {} ", a.pred.name());
            push_term(out, &a.args[1], names);
        }
        _ => push_atom(out, a, names),
    }
}

pub fn goal_to_string(g: &Goal, names: &[Option<Sym>]) -> String {
    let mut out = String::new();
    push_goal(&mut out, g, names, Prec::Disj);
    out
}

/// Enclosing precedence level, loosest to tightest.
#[derive(PartialEq, PartialOrd, Clone, Copy)]
enum Prec {
    Disj,
    Conj,
    Impl,
}

fn push_goal(out: &mut String, g: &Goal, names: &[Option<Sym>], prec: Prec) {
    match g {
        Goal::True => out.push_str("true"),
        Goal::Atom(a) => push_atom(out, a, names),
        Goal::Builtin(a) => push_builtin(out, a, names),
        Goal::Conj(l, r) => {
            let wrap = prec > Prec::Conj;
            if wrap {
                out.push('(');
            }
            push_goal(out, l, names, Prec::Impl);
            out.push_str(", ");
            push_goal(out, r, names, Prec::Conj);
            if wrap {
                out.push(')');
            }
        }
        Goal::Disj(l, r) => {
            let wrap = prec > Prec::Disj;
            if wrap {
                out.push('(');
            }
            push_goal(out, l, names, Prec::Conj);
            out.push_str(" ; ");
            push_goal(out, r, names, Prec::Disj);
            if wrap {
                out.push(')');
            }
        }
        Goal::Implication(h, c) => {
            push_hypothesis(out, h, names);
            out.push_str(" => ");
            // the consequent of => is again at implication level, but a
            // conjunction there must be parenthesized
            push_goal(out, c, names, Prec::Impl);
        }
    }
}

fn push_hypothesis(out: &mut String, h: &Rule, names: &[Option<Sym>]) {
    if h.body == Goal::True && h.grade == 1.0 {
        push_atom(out, &h.head, names);
    } else {
        out.push('(');
        push_atom(out, &h.head, names);
        if h.body != Goal::True {
            out.push_str(" :- ");
            push_goal(out, &h.body, names, Prec::Disj);
        }
        if h.grade != 1.0 {
            let _ = write!(out, " with ");
            push_float(out, h.grade);
        }
        out.push(')');
    }
}

pub fn clause_to_string(c: &Clause) -> String {
    let mut out = String::new();
    push_atom(&mut out, &c.rule.head, &c.var_names);
    if c.rule.body != Goal::True {
        out.push_str(" :- ");
        push_goal(&mut out, &c.rule.body, &c.var_names, Prec::Disj);
    }
    if c.rule.grade != 1.0 {
        out.push_str(" with ");
        push_float(&mut out, c.rule.grade);
    }
    out.push('.');
    out
}

pub fn program_to_string(p: &Program) -> String {
    let mut out = String::new();
    if let Some(l) = p.directives.lambda_cut {
        out.push_str(":- lambda_cut(");
        push_float(&mut out, l);
        out.push_str(").\n");
    }
    if let Some(t) = p.directives.t_norm {
        let name = match t {
            crate::unify::TNorm::Min => "min",
            crate::unify::TNorm::Product => "product",
            crate::unify::TNorm::Luka => "luka",
        };
        let _ = writeln!(out, ":- t_norm({name}).");
    }
    if let Some(tr) = p.directives.transitivity {
        let _ = writeln!(out, ":- transitivity({}).", if tr { "yes" } else { "no" });
    }
    for (a, b, v) in &p.proximity {
        push_ident(&mut out, a.name());
        out.push_str(" ~ ");
        push_ident(&mut out, b.name());
        out.push_str(" = ");
        push_float(&mut out, *v);
        out.push_str(".\n");
    }
    for c in &p.clauses {
        out.push_str(&clause_to_string(c));
        out.push('\n');
    }
    out
}

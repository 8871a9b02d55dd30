//! The fixed builtin predicates, shared by both engines.

use crate::syntax::{Atom, Num, Term};
use crate::unify::{unify, Bindings};
use crate::EngineError;

/// Execute a builtin call. `Ok(true)` is success (any bindings it made
/// stay trailed; the caller undoes them on backtracking), `Ok(false)` is
/// plain failure. Arithmetic on unbound or non-numeric terms is an error,
/// not a failure.
pub fn call_builtin(b: &mut Bindings, atom: &Atom, occurs_check: bool) -> Result<bool, EngineError> {
    match (atom.pred.name(), atom.args.len()) {
        ("true", 0) => Ok(true),
        ("fail", 0) => Ok(false),
        ("=", 2) => {
            let m = b.mark();
            if unify(b, &atom.args[0], &atom.args[1], occurs_check) {
                Ok(true)
            } else {
                b.undo_to(m);
                Ok(false)
            }
        }
        ("\\=", 2) => {
            let m = b.mark();
            let unified = unify(b, &atom.args[0], &atom.args[1], occurs_check);
            b.undo_to(m);
            Ok(!unified)
        }
        ("is", 2) => {
            let v = eval_arith(b, &atom.args[1])?;
            let m = b.mark();
            if unify(b, &atom.args[0], &Term::Num(v), occurs_check) {
                Ok(true)
            } else {
                b.undo_to(m);
                Ok(false)
            }
        }
        (op @ ("<" | ">" | "=<" | ">="), 2) => {
            let l = eval_arith(b, &atom.args[0])?;
            let r = eval_arith(b, &atom.args[1])?;
            Ok(compare(op, l, r))
        }
        _ => Err(EngineError::UnknownBuiltin(format!(
            "{}/{}",
            atom.pred.name(),
            atom.args.len()
        ))),
    }
}

fn compare(op: &str, l: Num, r: Num) -> bool {
    let ord = match (l, r) {
        (Num::Int(a), Num::Int(b)) => a.cmp(&b),
        (a, b) => a
            .as_f64()
            .partial_cmp(&b.as_f64())
            .unwrap_or(std::cmp::Ordering::Equal),
    };
    match op {
        "<" => ord.is_lt(),
        ">" => ord.is_gt(),
        "=<" => ord.is_le(),
        ">=" => ord.is_ge(),
        _ => unreachable!(),
    }
}

pub fn eval_arith(b: &Bindings, t: &Term) -> Result<Num, EngineError> {
    match b.walk(t) {
        Term::Num(n) => Ok(n),
        Term::Var(_) => Err(EngineError::Arith(
            "unbound variable in arithmetic expression".into(),
        )),
        Term::Comp(f, args) => {
            let name = f.name();
            match (name, args.len()) {
                ("-", 1) => match eval_arith(b, &args[0])? {
                    Num::Int(i) => Ok(Num::Int(
                        i.checked_neg()
                            .ok_or_else(|| EngineError::Arith("integer overflow".into()))?,
                    )),
                    Num::Float(x) => Ok(Num::Float(-x)),
                },
                ("+" | "-" | "*" | "//", 2) => {
                    let l = eval_arith(b, &args[0])?;
                    let r = eval_arith(b, &args[1])?;
                    apply(name, l, r)
                }
                _ => Err(EngineError::Arith(format!(
                    "unknown arithmetic function {name}/{}",
                    args.len()
                ))),
            }
        }
        other => Err(EngineError::Arith(format!(
            "non-numeric term in arithmetic expression: {}",
            crate::syntax::term_to_string(&other, &[])
        ))),
    }
}

fn apply(op: &str, l: Num, r: Num) -> Result<Num, EngineError> {
    let overflow = || EngineError::Arith("integer overflow".into());
    match (l, r) {
        (Num::Int(a), Num::Int(b)) => match op {
            "+" => a.checked_add(b).map(Num::Int).ok_or_else(overflow),
            "-" => a.checked_sub(b).map(Num::Int).ok_or_else(overflow),
            "*" => a.checked_mul(b).map(Num::Int).ok_or_else(overflow),
            "//" => {
                if b == 0 {
                    Err(EngineError::Arith("division by zero".into()))
                } else {
                    Ok(Num::Int(a.div_euclid(b)))
                }
            }
            _ => unreachable!(),
        },
        (a, b) => {
            let (a, b) = (a.as_f64(), b.as_f64());
            match op {
                "+" => Ok(Num::Float(a + b)),
                "-" => Ok(Num::Float(a - b)),
                "*" => Ok(Num::Float(a * b)),
                "//" => Err(EngineError::Arith(
                    "`//` needs integer operands".into(),
                )),
                _ => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_goal;
    use crate::syntax::Goal;

    fn builtin_atom(src: &str) -> (Atom, u32) {
        let q = parse_goal(src).unwrap();
        match q.goal {
            Goal::Builtin(a) => (a, q.n_vars),
            other => panic!("not a builtin: {other:?}"),
        }
    }

    fn run(src: &str) -> Result<bool, EngineError> {
        let (a, n_vars) = builtin_atom(src);
        let mut b = Bindings::new();
        for _ in 0..n_vars {
            b.new_var();
        }
        call_builtin(&mut b, &a, false)
    }

    #[test]
    fn is_and_comparisons() {
        assert_eq!(run("X is 3 + 4 * 2"), Ok(true));
        assert_eq!(run("7 is 3 + 4"), Ok(true));
        assert_eq!(run("8 is 3 + 4"), Ok(false));
        assert_eq!(run("3 is 7 // 2"), Ok(true));
        assert_eq!(run("1 < 2"), Ok(true));
        assert_eq!(run("2 < 2"), Ok(false));
        assert_eq!(run("2 =< 2"), Ok(true));
        assert_eq!(run("3 >= 4"), Ok(false));
        assert_eq!(run("2.5 > 2"), Ok(true));
    }

    #[test]
    fn arith_errors() {
        assert!(matches!(run("X < 1"), Err(EngineError::Arith(_))));
        assert!(matches!(run("X is Y + 1"), Err(EngineError::Arith(_))));
        assert!(matches!(run("X is 1 // 0"), Err(EngineError::Arith(_))));
        assert!(matches!(run("X is foo + 1"), Err(EngineError::Arith(_))));
    }

    #[test]
    fn unify_and_disunify() {
        assert_eq!(run("f(X, a) = f(b, Y)"), Ok(true));
        assert_eq!(run("a = b"), Ok(false));
        assert_eq!(run("a \\= b"), Ok(true));
        assert_eq!(run("X \\= b"), Ok(false));
    }

    #[test]
    fn disunify_leaves_no_bindings() {
        let (a, _) = builtin_atom("X \\= Y");
        let mut b = Bindings::new();
        let x = b.new_var();
        b.new_var();
        assert_eq!(call_builtin(&mut b, &a, false), Ok(false));
        assert_eq!(b.walk(&Term::Var(x)), Term::Var(x));
        assert_eq!(b.mark(), 0);
    }

    #[test]
    fn float_int_mix() {
        assert_eq!(run("X is 1 + 2.5"), Ok(true));
        // `is` result type matters: 3.0 is not 3
        assert_eq!(run("3 is 1.5 + 1.5"), Ok(false));
        assert_eq!(run("3.0 is 1.5 + 1.5"), Ok(true));
    }
}

use super::ast::*;
use super::lexer::{lex, LexError, Spanned, Tok};
use crate::sym::Sym;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub msg: String,
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> ParseError {
        ParseError { msg: e.msg, line: e.line, col: e.col }
    }
}

/// Parse a full program: clauses, proximity equations and directives.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(&toks);
    let mut prog = Program::default();
    while !p.at_end() {
        if p.peek_is(&Tok::Neck) {
            p.next();
            p.directive(&mut prog.directives)?;
        } else if p.peek2_is_tilde() {
            let eq = p.proximity_equation()?;
            prog.proximity.push(eq);
        } else {
            prog.clauses.push(p.clause()?);
        }
    }
    Ok(prog)
}

/// Parse a single query goal. A trailing `.` is accepted but not required.
pub fn parse_goal(src: &str) -> Result<Query, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(&toks);
    let goal = p.body()?;
    if p.peek_is(&Tok::Dot) {
        p.next();
    }
    p.expect_end()?;
    let (n_vars, var_names) = p.vars.finish();
    Ok(Query { goal, n_vars, var_names })
}

/// Per-clause variable numbering. Each `_` gets a fresh id.
#[derive(Default)]
struct ClauseVars {
    names: Vec<Option<Sym>>,
}

impl ClauseVars {
    fn get(&mut self, name: &str) -> VarId {
        if name == "_" {
            self.names.push(None);
            return (self.names.len() - 1) as VarId;
        }
        let sym = Sym::new(name);
        for (i, n) in self.names.iter().enumerate() {
            if *n == Some(sym) {
                return i as VarId;
            }
        }
        self.names.push(Some(sym));
        (self.names.len() - 1) as VarId
    }

    fn finish(&mut self) -> (u32, Vec<Option<Sym>>) {
        let names = std::mem::take(&mut self.names);
        (names.len() as u32, names)
    }
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    vars: ClauseVars,
}

/// What a parenthesized unit turned out to be.
enum Unit {
    Goal(Goal),
    /// `(head :- body)` or `(head with g)`: only legal left of `=>`.
    RuleExpr(Rule),
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Spanned]) -> Parser<'a> {
        Parser { toks, pos: 0, vars: ClauseVars::default() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_is(&self, t: &Tok) -> bool {
        self.peek() == Some(t)
    }

    fn peek2_is_tilde(&self) -> bool {
        matches!(self.toks.get(self.pos).map(|s| &s.tok), Some(Tok::Ident(_)))
            && self.toks.get(self.pos + 1).map(|s| &s.tok) == Some(&Tok::Tilde)
    }

    fn next(&mut self) -> Option<&'a Spanned> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map_or((0, 0), |s| (s.line, s.col))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { msg: msg.into(), line, col })
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(got) if got == t => {
                self.next();
                Ok(())
            }
            Some(got) => {
                let got = got.clone();
                self.err(format!("expected `{t}`, found `{got}`"))
            }
            None => self.err(format!("expected `{t}`, found end of input")),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => {
                let t = t.clone();
                self.err(format!("unexpected `{t}` after goal"))
            }
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            Some(t) => {
                let t = t.clone();
                self.err(format!("expected identifier, found `{t}`"))
            }
            None => self.err("expected identifier, found end of input"),
        }
    }

    // clause := head [':-' body] ['with' grade] '.'
    fn clause(&mut self) -> Result<Clause, ParseError> {
        self.vars = ClauseVars::default();
        let head = self.head_atom()?;
        if self.peek_is(&Tok::Arrow) {
            return self.err("`=>` is not allowed in a clause head");
        }
        let body = if self.peek_is(&Tok::Neck) {
            self.next();
            self.body()?
        } else {
            Goal::True
        };
        let grade = self.opt_grade()?;
        self.expect(&Tok::Dot)?;
        let (n_vars, var_names) = self.vars.finish();
        Ok(Clause { rule: Rule { head, body, grade }, n_vars, var_names })
    }

    fn head_atom(&mut self) -> Result<Atom, ParseError> {
        let name = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return self.err("expected a clause head"),
        };
        self.next();
        let args = if self.peek_is(&Tok::LParen) {
            self.next();
            let args = self.term_list()?;
            self.expect(&Tok::RParen)?;
            args
        } else {
            Vec::new()
        };
        Ok(Atom { pred: Sym::new(&name), args })
    }

    fn opt_grade(&mut self) -> Result<f64, ParseError> {
        if self.peek() == Some(&Tok::Ident("with".into())) {
            self.next();
            let g = match self.peek() {
                Some(Tok::Float(f)) => *f,
                Some(Tok::Int(i)) => *i as f64,
                _ => return self.err("expected a number after `with`"),
            };
            self.next();
            if !(g > 0.0 && g <= 1.0) {
                return self.err(format!("rule grade {g} is outside (0, 1]"));
            }
            Ok(g)
        } else {
            Ok(1.0)
        }
    }

    // directive := 'lambda_cut' '(' num ')' '.'
    //            | 't_norm' '(' min|product|luka ')' '.'
    //            | 'transitivity' '(' yes|no ')' '.'
    fn directive(&mut self, d: &mut Directives) -> Result<(), ParseError> {
        let name = self.ident()?;
        self.expect(&Tok::LParen)?;
        match name.as_str() {
            "lambda_cut" => {
                let v = match self.peek() {
                    Some(Tok::Float(f)) => *f,
                    Some(Tok::Int(i)) => *i as f64,
                    _ => return self.err("lambda_cut expects a number"),
                };
                self.next();
                if !(0.0..=1.0).contains(&v) {
                    return self.err(format!("lambda_cut {v} is outside [0, 1]"));
                }
                d.lambda_cut = Some(v);
            }
            "t_norm" => {
                let which = self.ident()?;
                d.t_norm = Some(match which.as_str() {
                    "min" | "godel" => crate::unify::TNorm::Min,
                    "product" => crate::unify::TNorm::Product,
                    "luka" | "lukasiewicz" => crate::unify::TNorm::Luka,
                    other => return self.err(format!("unknown t-norm `{other}`")),
                });
            }
            "transitivity" => {
                let which = self.ident()?;
                d.transitivity = Some(match which.as_str() {
                    "yes" => true,
                    "no" => false,
                    other => return self.err(format!("transitivity expects yes/no, found `{other}`")),
                });
            }
            other => return self.err(format!("unknown directive `{other}`")),
        }
        self.expect(&Tok::RParen)?;
        self.expect(&Tok::Dot)?;
        Ok(())
    }

    // proximity := ident '~' ident '=' num '.'
    fn proximity_equation(&mut self) -> Result<(Sym, Sym, f64), ParseError> {
        let a = self.ident()?;
        self.expect(&Tok::Tilde)?;
        let b = self.ident()?;
        self.expect(&Tok::Eq)?;
        let v = match self.peek() {
            Some(Tok::Float(f)) => *f,
            Some(Tok::Int(i)) => *i as f64,
            _ => return self.err("expected a proximity degree"),
        };
        self.next();
        if !(0.0..=1.0).contains(&v) {
            return self.err(format!("proximity degree {v} is outside [0, 1]"));
        }
        self.expect(&Tok::Dot)?;
        Ok((Sym::new(&a), Sym::new(&b), v))
    }

    // body := conj (';' body)?
    fn body(&mut self) -> Result<Goal, ParseError> {
        let l = self.conj()?;
        if self.peek_is(&Tok::Semi) {
            self.next();
            let r = self.body()?;
            Ok(Goal::disj(l, r))
        } else {
            Ok(l)
        }
    }

    // conj := impl (',' conj)?
    fn conj(&mut self) -> Result<Goal, ParseError> {
        let l = self.impl_goal()?;
        if self.peek_is(&Tok::Comma) {
            self.next();
            let r = self.conj()?;
            Ok(Goal::conj(l, r))
        } else {
            Ok(l)
        }
    }

    // impl := unit ('=>' impl)?   (right associative)
    fn impl_goal(&mut self) -> Result<Goal, ParseError> {
        let u = self.unit()?;
        if self.peek_is(&Tok::Arrow) {
            self.next();
            let hyp = match u {
                Unit::RuleExpr(r) => r,
                Unit::Goal(Goal::Atom(a)) => Rule::fact(a),
                Unit::Goal(_) => {
                    return self.err(
                        "the hypothesis of `=>` must be an atom or a parenthesized rule",
                    )
                }
            };
            let conseq = self.impl_goal()?;
            Ok(Goal::implication(hyp, conseq))
        } else {
            match u {
                Unit::Goal(g) => Ok(g),
                Unit::RuleExpr(_) => {
                    self.err("a rule expression is only allowed as the hypothesis of `=>`")
                }
            }
        }
    }

    // unit := '(' paren ')' | simple
    fn unit(&mut self) -> Result<Unit, ParseError> {
        if self.peek_is(&Tok::LParen) {
            self.next();
            let u = self.paren()?;
            self.expect(&Tok::RParen)?;
            Ok(u)
        } else {
            Ok(Unit::Goal(self.simple()?))
        }
    }

    // Inside parens either a goal, or a rule expression
    // `head :- body [with g]` / `head with g`.
    fn paren(&mut self) -> Result<Unit, ParseError> {
        let g = self.body()?;
        if self.peek_is(&Tok::Neck) {
            let head = match g {
                Goal::Atom(a) => a,
                _ => return self.err("the head of a rule expression must be an atom"),
            };
            self.next();
            let body = self.body()?;
            let grade = self.opt_grade()?;
            return Ok(Unit::RuleExpr(Rule { head, body, grade }));
        }
        if self.peek() == Some(&Tok::Ident("with".into())) {
            let head = match g {
                Goal::Atom(a) => a,
                _ => return self.err("only an atom can carry a grade here"),
            };
            let grade = self.opt_grade()?;
            return Ok(Unit::RuleExpr(Rule { head, body: Goal::True, grade }));
        }
        Ok(Unit::Goal(g))
    }

    // simple := arith (cmpop arith)?
    // With no comparison operator the term must be an atom call.
    fn simple(&mut self) -> Result<Goal, ParseError> {
        let l = self.arith()?;
        let op = match self.peek() {
            Some(Tok::Eq) => Some("="),
            Some(Tok::Neq) => Some("\\="),
            Some(Tok::Lt) => Some("<"),
            Some(Tok::Gt) => Some(">"),
            Some(Tok::Le) => Some("=<"),
            Some(Tok::Ge) => Some(">="),
            Some(Tok::Ident(s)) if s == "is" => Some("is"),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            let r = self.arith()?;
            return Ok(Goal::Builtin(Atom { pred: Sym::new(op), args: vec![l, r] }));
        }
        match l {
            Term::Const(s) if s.name() == "true" => Ok(Goal::True),
            Term::Const(s) => {
                let a = Atom { pred: s, args: vec![] };
                if is_builtin(s, 0) {
                    Ok(Goal::Builtin(a))
                } else {
                    Ok(Goal::Atom(a))
                }
            }
            Term::Comp(s, args) => {
                let a = Atom { pred: s, args };
                if is_builtin(a.pred, a.arity()) {
                    Ok(Goal::Builtin(a))
                } else {
                    Ok(Goal::Atom(a))
                }
            }
            Term::Var(_) => self.err("a variable is not a callable goal"),
            Term::Num(_) => self.err("a number is not a callable goal"),
            Term::Ctx(_) => unreachable!(),
        }
    }

    // arith := mul (('+'|'-') mul)*
    fn arith(&mut self) -> Result<Term, ParseError> {
        let mut t = self.mul()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => "+",
                Some(Tok::Minus) => "-",
                _ => break,
            };
            self.next();
            let r = self.mul()?;
            t = Term::Comp(Sym::new(op), vec![t, r]);
        }
        Ok(t)
    }

    // mul := prim (('*'|'//') prim)*
    fn mul(&mut self) -> Result<Term, ParseError> {
        let mut t = self.prim()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => "*",
                Some(Tok::IntDiv) => "//",
                _ => break,
            };
            self.next();
            let r = self.prim()?;
            t = Term::Comp(Sym::new(op), vec![t, r]);
        }
        Ok(t)
    }

    fn prim(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Int(i)) => {
                let i = *i;
                self.next();
                Ok(Term::int(i))
            }
            Some(Tok::Float(f)) => {
                let f = *f;
                self.next();
                Ok(Term::float(f))
            }
            Some(Tok::Minus) => {
                self.next();
                match self.prim()? {
                    Term::Num(Num::Int(i)) => Ok(Term::int(-i)),
                    Term::Num(Num::Float(f)) => Ok(Term::float(-f)),
                    t => Ok(Term::Comp(Sym::new("-"), vec![t])),
                }
            }
            Some(Tok::Var(name)) => {
                let name = name.clone();
                self.next();
                Ok(Term::Var(self.vars.get(&name)))
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.next();
                if self.peek_is(&Tok::LParen) {
                    self.next();
                    let args = self.term_list()?;
                    self.expect(&Tok::RParen)?;
                    Ok(Term::Comp(Sym::new(&name), args))
                } else {
                    Ok(Term::Const(Sym::new(&name)))
                }
            }
            Some(Tok::LParen) => {
                self.next();
                let t = self.arith()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::LBracket) => self.list(),
            Some(t) => {
                let t = t.clone();
                self.err(format!("expected a term, found `{t}`"))
            }
            None => self.err("expected a term, found end of input"),
        }
    }

    // list := '[' ']' | '[' terms ('|' term)? ']'
    fn list(&mut self) -> Result<Term, ParseError> {
        self.expect(&Tok::LBracket)?;
        if self.peek_is(&Tok::RBracket) {
            self.next();
            return Ok(Term::constant("[]"));
        }
        let mut items = vec![self.arith()?];
        while self.peek_is(&Tok::Comma) {
            self.next();
            items.push(self.arith()?);
        }
        let tail = if self.peek_is(&Tok::Bar) {
            self.next();
            self.arith()?
        } else {
            Term::constant("[]")
        };
        self.expect(&Tok::RBracket)?;
        Ok(items
            .into_iter()
            .rev()
            .fold(tail, |acc, h| Term::Comp(Sym::new("."), vec![h, acc])))
    }

    fn term_list(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut out = vec![self.arith()?];
        while self.peek_is(&Tok::Comma) {
            self.next();
            out.push(self.arith()?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fact_and_rule() {
        let p = parse_program("p(1). q(X) :- p(X).").unwrap();
        assert_eq!(p.clauses.len(), 2);
        assert_eq!(p.clauses[0].rule.head.pred.name(), "p");
        assert_eq!(p.clauses[0].rule.body, Goal::True);
        assert_eq!(p.clauses[1].n_vars, 1);
        assert_eq!(p.clauses[1].rule.grade, 1.0);
    }

    #[test]
    fn implication_right_assoc() {
        let q = parse_goal("a => b => c").unwrap();
        match &q.goal {
            Goal::Implication(h, g) => {
                assert_eq!(h.head.pred.name(), "a");
                assert!(matches!(**g, Goal::Implication(_, _)));
            }
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn arrow_binds_tighter_than_comma() {
        let q = parse_goal("a => b, c").unwrap();
        match &q.goal {
            Goal::Conj(l, r) => {
                assert!(matches!(**l, Goal::Implication(_, _)));
                assert!(matches!(**r, Goal::Atom(_)));
            }
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn rule_hypothesis() {
        let q = parse_goal("(q(X) :- r(X)) => q(1)").unwrap();
        match &q.goal {
            Goal::Implication(h, _) => {
                assert_eq!(h.head.pred.name(), "q");
                assert!(matches!(h.body, Goal::Atom(_)));
            }
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn parenthesized_consequent_conjunction() {
        let q = parse_goal("a => (b, c)").unwrap();
        match &q.goal {
            Goal::Implication(_, g) => assert!(matches!(**g, Goal::Conj(_, _))),
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn grades() {
        let p = parse_program("p :- q with 0.7. r with 0.5.").unwrap();
        assert_eq!(p.clauses[0].rule.grade, 0.7);
        assert_eq!(p.clauses[1].rule.grade, 0.5);
        assert!(parse_program("p with 0.0.").is_err());
        assert!(parse_program("p with 1.5.").is_err());
    }

    #[test]
    fn directives_and_proximity() {
        let p = parse_program(
            ":- lambda_cut(0.5).\n:- t_norm(product).\n:- transitivity(no).\na ~ b = 0.7.",
        )
        .unwrap();
        assert_eq!(p.directives.lambda_cut, Some(0.5));
        assert_eq!(p.directives.t_norm, Some(crate::unify::TNorm::Product));
        assert_eq!(p.directives.transitivity, Some(false));
        assert_eq!(p.proximity.len(), 1);
        assert_eq!(p.proximity[0].2, 0.7);
    }

    #[test]
    fn builtins_classified() {
        let q = parse_goal("X is 3 + 4 * 2, X > 10 ; fail").unwrap();
        match &q.goal {
            Goal::Disj(l, _) => match &**l {
                Goal::Conj(is, gt) => {
                    assert!(matches!(**is, Goal::Builtin(_)));
                    assert!(matches!(**gt, Goal::Builtin(_)));
                }
                other => panic!("got {other:?}"),
            },
            other => panic!("got {other:?}"),
        }
        // precedence: 3 + (4 * 2)
        if let Goal::Disj(l, _) = &q.goal {
            if let Goal::Conj(is, _) = &**l {
                if let Goal::Builtin(a) = &**is {
                    assert_eq!(
                        a.args[1],
                        Term::comp("+", vec![Term::int(3), Term::comp("*", vec![Term::int(4), Term::int(2)])])
                    );
                }
            }
        }
    }

    #[test]
    fn underscore_is_fresh() {
        let p = parse_program("p(_, _, X, X).").unwrap();
        let c = &p.clauses[0];
        assert_eq!(c.n_vars, 3);
        assert_eq!(c.rule.head.args[0], Term::Var(0));
        assert_eq!(c.rule.head.args[1], Term::Var(1));
        assert_eq!(c.rule.head.args[2], Term::Var(2));
        assert_eq!(c.rule.head.args[3], Term::Var(2));
        assert_eq!(c.var_names[0], None);
        assert_eq!(c.var_names[2], Some(Sym::new("X")));
    }

    #[test]
    fn head_implication_rejected() {
        assert!(parse_program("p => q :- r.").is_err());
        assert!(parse_goal("(a, b) => c").is_err());
        assert!(parse_goal("(q :- r)").is_err());
    }

    #[test]
    fn lists_parse() {
        let q = parse_goal("p([1, 2 | T])").unwrap();
        let expected = Term::comp(
            ".",
            vec![
                Term::int(1),
                Term::comp(".", vec![Term::int(2), Term::Var(0)]),
            ],
        );
        match &q.goal {
            Goal::Atom(a) => assert_eq!(a.args[0], expected),
            other => panic!("got {other:?}"),
        }
    }
}

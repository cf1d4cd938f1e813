//! Lexing, parsing and printing of DSP source text.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse_expr, parse_file, parse_module, ParseError};

use crate::diag::{Diagnostic, Pos, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl FrontendError {
    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Lex(e) => e.pos,
            FrontendError::Parse(e) => e.pos,
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let message = match self {
            FrontendError::Lex(e) => e.message.clone(),
            FrontendError::Parse(e) => format!("expected {}, found {}", e.expected, e.found),
        };
        Diagnostic::error(self.pos(), message)
    }
}

/// Tokenize and parse every module in `source`.
pub fn parse_source(source: &str) -> Result<Vec<ModuleDecl>, FrontendError> {
    let tokens = tokenize(source)?;
    Ok(parse_file(&tokens)?)
}

/// Parse a standalone expression such as a command-line literal.
pub fn parse_expr_source(source: &str) -> Result<Expr, FrontendError> {
    let tokens = tokenize(source)?;
    Ok(parse_expr(&tokens)?)
}

/// Reset every span to the default so ASTs from different texts compare structurally.
pub fn erase_spans(m: &mut ModuleDecl) {
    fn ident(i: &mut Ident) {
        i.span = Span::default();
    }
    fn expr(e: &mut Expr) {
        e.span = Span::default();
        match &mut e.kind {
            ExprKind::Neg(inner) => expr(inner),
            ExprKind::Binary(_, l, r) | ExprKind::Compare(_, l, r) => {
                expr(l);
                expr(r);
            }
            ExprKind::Func(_, items) | ExprKind::List(items) => items.iter_mut().for_each(expr),
            ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::Bool(_) | ExprKind::Var(_) => {}
        }
    }
    m.span = Span::default();
    ident(&mut m.name);
    for p in m.inputs.iter_mut().chain(m.outputs.iter_mut()) {
        ident(&mut p.name);
    }
    for method in &mut m.methods {
        method.span = Span::default();
        for s in &mut method.statements {
            s.span = Span::default();
            match &mut s.kind {
                StmtKind::Bind { target, rhs, .. } => {
                    ident(target);
                    match rhs {
                        BindRhs::Expr(e) | BindRhs::Select(e) => expr(e),
                        BindRhs::For { begin, end, step } => {
                            expr(begin);
                            expr(end);
                            expr(step);
                        }
                    }
                }
                StmtKind::When(e) | StmtKind::Test(e) | StmtKind::Verify(e) => expr(e),
                StmtKind::Call(site) | StmtKind::Dcall(site) => {
                    ident(&mut site.callee);
                    site.args.iter_mut().for_each(expr);
                    site.outs.iter_mut().for_each(ident);
                }
                StmtKind::Find { callee, args, target } => {
                    ident(callee);
                    args.iter_mut().for_each(expr);
                    ident(target);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Dtype;

    use crate::corpus::{FOR as FOR_MODULE, QUARTER};

    fn one(src: &str) -> ModuleDecl {
        let mut ms = parse_source(src).unwrap();
        assert_eq!(ms.len(), 1);
        ms.remove(0)
    }

    #[test]
    fn parses_quarter_circle() {
        let m = one(QUARTER);
        assert_eq!(m.name.name, "pointInQuarterCircle");
        assert_eq!(m.inputs.len(), 1);
        assert_eq!((m.inputs[0].name.name.as_str(), m.inputs[0].dtype), ("R", Dtype::Real));
        let outs: Vec<_> = m.outputs.iter().map(|p| p.name.name.as_str()).collect();
        assert_eq!(outs, ["X", "Y"]);
        assert_eq!(m.methods.len(), 1);
        let kinds: Vec<_> = m.methods[0].statements.iter().map(|s| s.kind.keyword()).collect();
        assert_eq!(kinds, ["bind", "bind", "bind", "test"]);
    }

    #[test]
    fn parses_for_module_with_short_terminator() {
        let m = one(FOR_MODULE);
        assert_eq!(m.name.name, "for");
        assert_eq!((m.inputs.len(), m.outputs.len(), m.methods.len()), (3, 1, 2));
        let StmtKind::Call(site) = &m.methods[1].statements[2].kind else { panic!("expected call") };
        assert_eq!(site.callee.name, "for");
        assert_eq!(site.args.len(), 3);
        assert_eq!(site.outs[0].name, "N");
    }

    #[test]
    fn module_without_methods_is_rejected() {
        let err = parse_source("m({A : int}, {B : int}) end module;").unwrap_err();
        let FrontendError::Parse(p) = err else { panic!("expected parse error") };
        assert_eq!(p.expected, "`method`");
        assert_eq!(p.found, "identifier `end`");
    }

    #[test]
    fn power_binds_tighter_than_plus_and_minus() {
        let e = parse_expr_source("X^2 + Y^2").unwrap();
        let ExprKind::Binary(BinOp::Add, l, r) = e.kind else { panic!() };
        assert!(matches!(l.kind, ExprKind::Binary(BinOp::Pow, ..)));
        assert!(matches!(r.kind, ExprKind::Binary(BinOp::Pow, ..)));

        let e = parse_expr_source("-X^2").unwrap();
        let ExprKind::Neg(inner) = e.kind else { panic!() };
        assert!(matches!(inner.kind, ExprKind::Binary(BinOp::Pow, ..)));

        let e = parse_expr_source("2^3^2").unwrap();
        let ExprKind::Binary(BinOp::Pow, _, r) = e.kind else { panic!() };
        assert!(matches!(r.kind, ExprKind::Binary(BinOp::Pow, ..)));
    }

    #[test]
    fn statement_order_is_textual() {
        let m = one("m({R : real}, {X : real})
               method
                 test(D =< R);
                 D : real = X * 2.0;
                 X : real = for(0.0, R, 1.0);
               end method;
             end;");
        let kinds: Vec<_> = m.methods[0].statements.iter().map(|s| s.kind.keyword()).collect();
        assert_eq!(kinds, ["test", "bind", "bind"]);
    }

    #[test]
    fn errors_point_inside_source() {
        let src = "m({A : int}, {B : int})\n  method\n    B : int = A +;\n  end method;\nend;";
        let err = parse_source(src).unwrap_err();
        let pos = err.pos();
        assert_eq!((pos.line, pos.col), (3, 18));
        assert!(pos.offset <= src.len());
    }

    #[test]
    fn unknown_function_is_a_parse_error() {
        assert!(parse_expr_source("floor(2.5)").is_err());
        assert!(parse_expr_source("sqrt(1.0, 2.0)").is_err());
    }

    #[test]
    fn select_accepts_literal_and_variable_lists() {
        let m = one("m({L : list}, {A : int, B : int})
               method
                 A : int = select([3, 1, 2]);
                 B : int = select(L);
               end method;
             end;");
        assert!(m.methods[0]
            .statements
            .iter()
            .all(|s| matches!(s.kind, StmtKind::Bind { rhs: BindRhs::Select(_), .. })));
    }

    #[test]
    fn several_modules_per_file() {
        let src = format!("{QUARTER}\n{FOR_MODULE}");
        let ms = parse_source(&src).unwrap();
        assert_eq!(ms.len(), 2);
    }

    #[test]
    fn pretty_round_trips_example_modules() {
        for src in [QUARTER, FOR_MODULE] {
            let mut a = one(src);
            let printed = pretty::module_to_string(&a);
            let mut b = one(&printed);
            erase_spans(&mut a);
            erase_spans(&mut b);
            assert_eq!(a, b, "{printed}");
        }
    }

    mod roundtrip {
        use super::*;
        use proptest::prelude::*;

        fn var() -> impl Strategy<Value = String> {
            prop::sample::select(vec!["A", "B", "X1", "long_name", "Q"]).prop_map(String::from)
        }

        fn expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (0i64..1000).prop_map(ExprKind::Int),
                (0u32..10_000).prop_map(|v| ExprKind::Real(v as f64 / 8.0)),
                any::<bool>().prop_map(ExprKind::Bool),
                var().prop_map(ExprKind::Var),
            ]
            .prop_map(|k| Expr::new(k, Span::default()));
            leaf.prop_recursive(4, 32, 3, |inner| {
                let b = |k| Expr::new(k, Span::default());
                prop_oneof![
                    inner.clone().prop_map(move |e| b(ExprKind::Neg(Box::new(e)))),
                    (
                        prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                        inner.clone(),
                        inner.clone()
                    )
                        .prop_map(move |(op, l, r)| b(ExprKind::Binary(
                            op,
                            Box::new(l),
                            Box::new(r)
                        ))),
                    (
                        prop::sample::select(vec![CmpOp::Le, CmpOp::Ge, CmpOp::Lt, CmpOp::Gt, CmpOp::Eq, CmpOp::Ne]),
                        inner.clone(),
                        inner.clone()
                    )
                        .prop_map(move |(op, l, r)| b(ExprKind::Compare(
                            op,
                            Box::new(l),
                            Box::new(r)
                        ))),
                    (inner.clone(), inner.clone()).prop_map(move |(l, r)| b(ExprKind::Func(Func::Max, vec![l, r]))),
                    prop::collection::vec(inner, 0..3).prop_map(move |items| b(ExprKind::List(items))),
                ]
            })
        }

        fn stmt() -> impl Strategy<Value = Stmt> {
            let id = |n: String| Ident::new(n, Span::default());
            prop_oneof![
                (var(), expr()).prop_map(move |(t, e)| StmtKind::Bind {
                    target: id(t),
                    dtype: Dtype::Real,
                    rhs: BindRhs::Expr(e)
                }),
                (var(), expr(), expr(), expr()).prop_map(move |(t, b, e, s)| StmtKind::Bind {
                    target: id(t),
                    dtype: Dtype::Int,
                    rhs: BindRhs::For { begin: b, end: e, step: s }
                }),
                expr().prop_map(StmtKind::Test),
                expr().prop_map(StmtKind::Verify),
                (prop::collection::vec(expr(), 0..3), prop::collection::vec(var(), 0..3)).prop_map(
                    move |(args, outs)| StmtKind::Dcall(CallSite {
                        callee: id("for".into()),
                        args,
                        outs: outs.into_iter().map(id).collect()
                    })
                ),
                (prop::collection::vec(expr(), 0..3), var()).prop_map(move |(args, t)| StmtKind::Find {
                    callee: id("m".into()),
                    args,
                    target: id(t)
                }),
            ]
            .prop_map(|kind| Stmt { kind, span: Span::default() })
        }

        proptest! {
            #[test]
            fn print_then_parse_is_identity(stmts in prop::collection::vec(stmt(), 0..6)) {
                let m = ModuleDecl {
                    name: Ident::new("gen", Span::default()),
                    inputs: vec![ParamDecl { name: Ident::new("I", Span::default()), dtype: Dtype::List }],
                    outputs: vec![],
                    methods: vec![MethodDecl { statements: stmts, span: Span::default() }],
                    span: Span::default(),
                };
                let printed = pretty::module_to_string(&m);
                let mut back = parse_source(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
                prop_assert_eq!(back.len(), 1);
                erase_spans(&mut back[0]);
                prop_assert_eq!(&back[0], &m);
            }
        }
    }
}

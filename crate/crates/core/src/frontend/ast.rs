use crate::diag::Span;
use crate::value::Dtype;

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDecl {
    pub name: Ident,
    pub inputs: Vec<ParamDecl>,
    pub outputs: Vec<ParamDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

impl ModuleDecl {
    pub fn params(&self) -> impl Iterator<Item = &ParamDecl> {
        self.inputs.iter().chain(self.outputs.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: Ident,
    pub dtype: Dtype,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub statements: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Bind { target: Ident, dtype: Dtype, rhs: BindRhs },
    When(Expr),
    Test(Expr),
    Verify(Expr),
    Call(CallSite),
    Dcall(CallSite),
    Find { callee: Ident, args: Vec<Expr>, target: Ident },
}

impl StmtKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            StmtKind::Bind { .. } => "bind",
            StmtKind::When(_) => "when",
            StmtKind::Test(_) => "test",
            StmtKind::Verify(_) => "verify",
            StmtKind::Call(_) => "call",
            StmtKind::Dcall(_) => "dcall",
            StmtKind::Find { .. } => "find",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BindRhs {
    Expr(Expr),
    For { begin: Expr, end: Expr, step: Expr },
    Select(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallSite {
    pub callee: Ident,
    pub args: Vec<Expr>,
    pub outs: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Real(f64),
    Bool(bool),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    Func(Func, Vec<Expr>),
    List(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "=<",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Eq => "=",
            CmpOp::Ne => "\\=",
        }
    }
}

/// Builtin expression functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Abs,
    Min,
    Max,
    Div,
    Mod,
    Len,
    Cons,
}

impl Func {
    pub const ALL: [Func; 8] =
        [Func::Sqrt, Func::Abs, Func::Min, Func::Max, Func::Div, Func::Mod, Func::Len, Func::Cons];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Div => "div",
            Func::Mod => "mod",
            Func::Len => "len",
            Func::Cons => "cons",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Sqrt | Func::Abs | Func::Len => 1,
            Func::Min | Func::Max | Func::Div | Func::Mod | Func::Cons => 2,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Variables referenced by this expression, in order of first appearance.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            ExprKind::Var(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            ExprKind::Neg(e) => e.collect_vars(out),
            ExprKind::Binary(_, l, r) | ExprKind::Compare(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            ExprKind::Func(_, args) | ExprKind::List(args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::Bool(_) => {}
        }
    }
}

impl Stmt {
    /// Names this statement defines.
    pub fn defines(&self) -> Vec<&Ident> {
        match &self.kind {
            StmtKind::Bind { target, .. } | StmtKind::Find { target, .. } => vec![target],
            StmtKind::Call(site) | StmtKind::Dcall(site) => site.outs.iter().collect(),
            StmtKind::When(_) | StmtKind::Test(_) | StmtKind::Verify(_) => Vec::new(),
        }
    }

    /// Expressions this statement evaluates.
    pub fn operands(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Bind { rhs, .. } => match rhs {
                BindRhs::Expr(e) | BindRhs::Select(e) => vec![e],
                BindRhs::For { begin, end, step } => vec![begin, end, step],
            },
            StmtKind::When(e) | StmtKind::Test(e) | StmtKind::Verify(e) => vec![e],
            StmtKind::Call(site) | StmtKind::Dcall(site) => site.args.iter().collect(),
            StmtKind::Find { args, .. } => args.iter().collect(),
        }
    }

    /// Variable names read by this statement, deduplicated, in order of first use.
    pub fn reads(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in self.operands() {
            for v in e.variables() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

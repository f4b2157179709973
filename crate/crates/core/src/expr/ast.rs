use std::fmt;

/// Byte range `[start, end)` into the source text an expression was parsed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sqrt,
    Exp,
    Ln,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sqrt,
        Func::Exp,
        Func::Ln,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Every built-in takes exactly one argument.
    pub fn arity(self) -> usize {
        1
    }
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Number(f64),
    Var { index: usize, name: String },
    Param { index: usize, name: String },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// An immutable expression tree. Equality ignores source spans.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Number(a), ExprKind::Number(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Var { index: i, name: a }, ExprKind::Var { index: j, name: b }) => {
                i == j && a == b
            }
            (ExprKind::Param { index: i, name: a }, ExprKind::Param { index: j, name: b }) => {
                i == j && a == b
            }
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a == b,
            (ExprKind::Binary(o1, a1, b1), ExprKind::Binary(o2, a2, b2)) => {
                o1 == o2 && a1 == a2 && b1 == b2
            }
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    /// Numeric literal. Negative values become a negation node so that the
    /// printed form parses back to the same tree.
    pub fn num(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite literal {x}");
        if x < 0.0 || (x == 0.0 && x.is_sign_negative()) {
            Expr::new(ExprKind::Neg(Box::new(Expr::new(ExprKind::Number(-x)))))
        } else {
            Expr::new(ExprKind::Number(x))
        }
    }

    pub fn var(index: usize, name: &str) -> Self {
        Expr::new(ExprKind::Var {
            index,
            name: name.to_string(),
        })
    }

    pub fn param(index: usize, name: &str) -> Self {
        Expr::new(ExprKind::Param {
            index,
            name: name.to_string(),
        })
    }

    pub fn call(f: Func, arg: Expr) -> Self {
        Expr::new(ExprKind::Call(f, Box::new(arg)))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)))
    }

    pub fn negate(a: Expr) -> Self {
        Expr::new(ExprKind::Neg(Box::new(a)))
    }

    pub fn pow(self, e: Expr) -> Self {
        Expr::binary(BinOp::Pow, self, e)
    }

    pub fn sin(self) -> Self {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(self) -> Self {
        Expr::call(Func::Cos, self)
    }
    pub fn sqrt(self) -> Self {
        Expr::call(Func::Sqrt, self)
    }

    /// The literal value if this node is a (possibly negated) number.
    pub fn as_literal(&self) -> Option<f64> {
        match &self.kind {
            ExprKind::Number(x) => Some(*x),
            ExprKind::Neg(inner) => inner.as_literal().map(|x| -x),
            _ => None,
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        self.as_literal() == Some(0.0)
    }

    pub fn is_one_literal(&self) -> bool {
        self.as_literal() == Some(1.0)
    }

    /// Sum of terms, dropping literal zeros. Used by programmatic builders.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut acc: Option<Expr> = None;
        for t in terms {
            if t.is_zero_literal() {
                continue;
            }
            acc = Some(match acc {
                None => t,
                Some(a) => match t.kind {
                    ExprKind::Neg(inner) => Expr::binary(BinOp::Sub, a, *inner),
                    _ => Expr::binary(BinOp::Add, a, t),
                },
            });
        }
        acc.unwrap_or_else(|| Expr::num(0.0))
    }

    /// Product of factors, dropping literal ones and collapsing on a literal zero.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut acc: Option<Expr> = None;
        let mut negate = false;
        for f in factors {
            if f.is_zero_literal() {
                return Expr::num(0.0);
            }
            if f.is_one_literal() {
                continue;
            }
            if f.as_literal() == Some(-1.0) {
                negate = !negate;
                continue;
            }
            acc = Some(match acc {
                None => f,
                Some(a) => Expr::binary(BinOp::Mul, a, f),
            });
        }
        let e = acc.unwrap_or_else(|| Expr::num(1.0));
        if negate {
            Expr::negate(e)
        } else {
            e
        }
    }

    /// Rebind variable references through `map(old_index) -> new expression`.
    pub fn substitute(&self, map: &dyn Fn(usize, &str) -> Expr) -> Expr {
        let kind = match &self.kind {
            ExprKind::Var { index, name } => return map(*index, name),
            ExprKind::Number(_) | ExprKind::Param { .. } => return self.clone(),
            ExprKind::Neg(a) => ExprKind::Neg(Box::new(a.substitute(map))),
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map)))
            }
            ExprKind::Call(f, a) => ExprKind::Call(*f, Box::new(a.substitute(map))),
        };
        Expr {
            kind,
            span: self.span,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match &self.kind {
            ExprKind::Number(_) | ExprKind::Var { .. } | ExprKind::Param { .. } => 1,
            ExprKind::Neg(a) | ExprKind::Call(_, a) => 1 + a.size(),
            ExprKind::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match &self.kind {
            ExprKind::Number(_) | ExprKind::Var { .. } | ExprKind::Param { .. } => 1,
            ExprKind::Neg(a) | ExprKind::Call(_, a) => 1 + a.depth(),
            ExprKind::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::sum([self, o])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        if o.is_zero_literal() {
            return self;
        }
        if self.is_zero_literal() {
            return -o;
        }
        Expr::binary(BinOp::Sub, self, o)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::product([self, o])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        if self.is_zero_literal() {
            return Expr::num(0.0);
        }
        if o.is_one_literal() {
            return self;
        }
        Expr::binary(BinOp::Div, self, o)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        if self.is_zero_literal() {
            return Expr::num(0.0);
        }
        match self.kind {
            ExprKind::Neg(inner) => *inner,
            _ => Expr::negate(self),
        }
    }
}

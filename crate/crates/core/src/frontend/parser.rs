use super::ast::*;
use super::lexer::{Tok, Token};
use super::{FrontendError, Span};
use crate::term::Sort;

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, FrontendError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Tok {
        &self.toks[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(FrontendError::Parse {
            span: self.peek_span(),
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> PResult<Span> {
        if self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.error(&[&tok.to_string()])
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok((name.clone(), span))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut nodes = Vec::new();
        while self.peek() == &Tok::Node {
            nodes.push(self.node()?);
        }
        if self.peek() != &Tok::Eof || nodes.is_empty() {
            return self.error(&["`node`"]);
        }
        let pragma_mains: Vec<&NodeDecl> = nodes.iter().filter(|n| n.main_pragma).collect();
        let main = match pragma_mains.as_slice() {
            [one] => one.name.clone(),
            [] => nodes
                .iter()
                .find(|n| n.name == "main")
                .unwrap_or_else(|| nodes.last().unwrap())
                .name
                .clone(),
            [_, second, ..] => {
                return Err(FrontendError::Type {
                    span: second.span,
                    message: "more than one node carries `--%MAIN`".into(),
                })
            }
        };
        Ok(Program { nodes, main })
    }

    fn sort(&mut self) -> PResult<Sort> {
        let sort = match self.peek() {
            Tok::TyBool => Sort::Bool,
            Tok::TyInt => Sort::Int,
            Tok::TyReal => Sort::Real,
            _ => return self.error(&["`bool`", "`int`", "`real`"]),
        };
        self.bump();
        Ok(sort)
    }

    /// `a, b : int`
    fn decl_group(&mut self, out: &mut Vec<VarDecl>) -> PResult<()> {
        let mut names = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            names.push(self.ident()?);
        }
        self.expect(&Tok::Colon)?;
        let sort = self.sort()?;
        out.extend(names.into_iter().map(|(name, span)| VarDecl { name, sort, span }));
        Ok(())
    }

    fn params(&mut self) -> PResult<Vec<VarDecl>> {
        let mut out = Vec::new();
        self.expect(&Tok::LParen)?;
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            self.decl_group(&mut out)?;
            if self.eat(&Tok::Semi) {
                if self.eat(&Tok::RParen) {
                    return Ok(out);
                }
                continue;
            }
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            return self.error(&["`;`", "`)`"]);
        }
    }

    fn node(&mut self) -> PResult<NodeDecl> {
        let start = self.expect(&Tok::Node)?;
        let (name, _) = self.ident()?;
        let inputs = self.params()?;
        self.expect(&Tok::Returns)?;
        let outputs = self.params()?;
        self.eat(&Tok::Semi);
        let mut locals = Vec::new();
        if self.eat(&Tok::Var) {
            loop {
                self.decl_group(&mut locals)?;
                self.expect(&Tok::Semi)?;
                if !matches!(self.peek(), Tok::Ident(_)) {
                    break;
                }
            }
        }
        self.expect(&Tok::Let)?;
        let mut node = NodeDecl {
            name,
            span: start,
            inputs,
            outputs,
            locals,
            equations: Vec::new(),
            assertions: Vec::new(),
            properties: Vec::new(),
            main_pragma: false,
        };
        loop {
            match self.peek() {
                Tok::Tel => break,
                Tok::Ident(_) => {
                    let (lhs, lspan) = self.ident()?;
                    self.expect(&Tok::Eq)?;
                    let rhs = self.expr()?;
                    let end = self.expect(&Tok::Semi)?;
                    node.equations.push(Equation {
                        lhs,
                        rhs,
                        span: lspan.join(end),
                    });
                }
                Tok::Assert => {
                    let s = self.bump().span;
                    let expr = self.expr()?;
                    let end = self.expect(&Tok::Semi)?;
                    node.assertions.push(Assertion {
                        expr,
                        span: s.join(end),
                    });
                }
                Tok::PragmaProperty => {
                    let s = self.bump().span;
                    let (name, _) = self.ident()?;
                    let end = self.expect(&Tok::Semi)?;
                    node.properties.push(PropertyPragma {
                        name,
                        span: s.join(end),
                    });
                }
                Tok::PragmaMain => {
                    self.bump();
                    self.expect(&Tok::Semi)?;
                    node.main_pragma = true;
                }
                _ => return self.error(&["equation", "`assert`", "pragma", "`tel`"]),
            }
        }
        let end = self.expect(&Tok::Tel)?;
        self.eat(&Tok::Semi);
        node.span = start.join(end);
        Ok(node)
    }

    fn mk(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span, ann: () }
    }

    fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        let span = a.span.join(b.span);
        Self::mk(ExprKind::Binary(op, Box::new(a), Box::new(b)), span)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.arrow_level()
    }

    // level 1: `if` and right-associative `->`
    fn arrow_level(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::If {
            return self.ite();
        }
        let lhs = self.implies_level()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.arrow_level()?;
            let span = lhs.span.join(rhs.span);
            return Ok(Self::mk(ExprKind::Arrow(Box::new(lhs), Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    fn ite(&mut self) -> PResult<Expr> {
        let start = self.expect(&Tok::If)?;
        let c = self.expr()?;
        self.expect(&Tok::Then)?;
        let t = self.expr()?;
        self.expect(&Tok::Else)?;
        let e = self.arrow_level()?;
        let span = start.join(e.span);
        Ok(Self::mk(ExprKind::Ite(Box::new(c), Box::new(t), Box::new(e)), span))
    }

    // level 2: right-associative `=>`
    fn implies_level(&mut self) -> PResult<Expr> {
        let lhs = self.or_level()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies_level()?;
            return Ok(Self::binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    // level 3: `or`, `xor`
    fn or_level(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_level()?;
        loop {
            let op = match self.peek() {
                Tok::Or => BinOp::Or,
                Tok::Xor => BinOp::Xor,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.and_level()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    // level 4: `and`
    fn and_level(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_level()?;
        while self.eat(&Tok::And) {
            let rhs = self.not_level()?;
            lhs = Self::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    // level 5: prefix `not`
    fn not_level(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Not {
            let start = self.bump().span;
            let e = self.not_level()?;
            let span = start.join(e.span);
            return Ok(Self::mk(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        self.cmp_level()
    }

    // level 6: non-associative comparisons
    fn cmp_level(&mut self) -> PResult<Expr> {
        let lhs = self.add_level()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Neq => BinOp::Neq,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add_level()?;
        Ok(Self::binary(op, lhs, rhs))
    }

    // level 7: `+`, `-`
    fn add_level(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_level()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_level()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    // level 8: `*`, `/`, `div`, `mod`
    fn mul_level(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary_level()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::RealDiv,
                Tok::Div => BinOp::Div,
                Tok::Mod => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary_level()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    // level 9: unary minus and `pre`
    fn unary_level(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Minus => {
                let start = self.bump().span;
                let e = self.unary_level()?;
                let span = start.join(e.span);
                Ok(Self::mk(ExprKind::Unary(UnOp::Neg, Box::new(e)), span))
            }
            Tok::Pre => {
                let start = self.bump().span;
                let e = self.unary_level()?;
                let span = start.join(e.span);
                Ok(Self::mk(ExprKind::Pre(Box::new(e)), span))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let span = self.peek_span();
        match self.peek() {
            Tok::Int(i) => {
                self.bump();
                Ok(Self::mk(ExprKind::Int(i.clone()), span))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Self::mk(ExprKind::Real(r.clone()), span))
            }
            Tok::Bool(b) => {
                self.bump();
                Ok(Self::mk(ExprKind::Bool(*b), span))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            if !self.eat(&Tok::Comma) {
                                return self.error(&["`,`", "`)`"]);
                            }
                        }
                    }
                    let span = span.join(self.prev_span());
                    Ok(Self::mk(ExprKind::Call(name.clone(), args), span))
                } else {
                    Ok(Self::mk(ExprKind::Var(name.clone()), span))
                }
            }
            Tok::LParen => {
                self.bump();
                let mut e = self.expr()?;
                let end = self.expect(&Tok::RParen)?;
                e.span = span.join(end);
                Ok(e)
            }
            Tok::If => self.ite(),
            _ => self.error(&["expression"]),
        }
    }
}

/// Parses a token stream produced by [`super::lex`] into a program.
pub fn parse(tokens: &[Token]) -> Result<Program, FrontendError> {
    Parser { toks: tokens, pos: 0 }.program()
}

/// Parses a token stream consisting of exactly one expression.
pub fn parse_expr_tokens(tokens: &[Token]) -> Result<Expr, FrontendError> {
    let mut p = Parser { toks: tokens, pos: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lex;

    fn expr(src: &str) -> Expr {
        parse_expr_tokens(&lex(src).unwrap()).unwrap()
    }

    fn shape(e: &Expr) -> String {
        match &e.kind {
            ExprKind::Bool(b) => b.to_string(),
            ExprKind::Int(i) => i.to_string(),
            ExprKind::Real(r) => format!("{r}r"),
            ExprKind::Var(v) => v.clone(),
            ExprKind::Unary(UnOp::Not, a) => format!("(not {})", shape(a)),
            ExprKind::Unary(UnOp::Neg, a) => format!("(neg {})", shape(a)),
            ExprKind::Binary(op, a, b) => format!("({} {} {})", op.symbol(), shape(a), shape(b)),
            ExprKind::Ite(c, t, f) => format!("(ite {} {} {})", shape(c), shape(t), shape(f)),
            ExprKind::Arrow(a, b) => format!("(-> {} {})", shape(a), shape(b)),
            ExprKind::Pre(a) => format!("(pre {})", shape(a)),
            ExprKind::Call(f, args) => {
                format!("({f} {})", args.iter().map(shape).collect::<Vec<_>>().join(" "))
            }
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(shape(&expr("0 -> pre x + 1")), "(-> 0 (+ (pre x) 1))");
        assert_eq!(shape(&expr("a or b and not c")), "(or a (and b (not c)))");
        assert_eq!(shape(&expr("a => b => c")), "(=> a (=> b c))");
        assert_eq!(shape(&expr("x + 2 * y >= -z")), "(>= (+ x (* 2 y)) (neg z))");
        assert_eq!(shape(&expr("not x < 3")), "(not (< x 3))");
        assert_eq!(shape(&expr("a - b - c")), "(- (- a b) c)");
        assert_eq!(shape(&expr("1 -> 2 -> 3")), "(-> 1 (-> 2 3))");
        assert_eq!(
            shape(&expr("if c then 0 else 0 -> pre x")),
            "(ite c 0 (-> 0 (pre x)))"
        );
        assert_eq!(shape(&expr("x + if c then 1 else 2")), "(+ x (ite c 1 2))");
        assert_eq!(shape(&expr("f(x, 1) mod 2")), "(mod (f x 1) 2)");
    }

    #[test]
    fn comparison_is_non_associative() {
        assert!(parse_expr_tokens(&lex("a < b < c").unwrap()).is_err());
    }

    #[test]
    fn empty_node() {
        let p = parse(&lex("node f() returns (); let tel;").unwrap()).unwrap();
        assert_eq!(p.nodes.len(), 1);
        assert_eq!(p.main, "f");
        assert!(p.nodes[0].equations.is_empty());
    }

    #[test]
    fn malformed_expression() {
        let err = parse(&lex("node f() returns (x: int); let x = (1 +; tel").unwrap()).unwrap_err();
        match err {
            FrontendError::Parse { span, found, .. } => {
                assert_eq!(found, "`;`");
                assert_eq!((span.start_line, span.start_col), (1, 40));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn main_selection() {
        let src = "node a() returns (); let tel node main() returns (); let tel node c() returns (); let tel";
        assert_eq!(parse(&lex(src).unwrap()).unwrap().main, "main");
        let src = "node a() returns (); let --%MAIN; tel node main() returns (); let tel";
        assert_eq!(parse(&lex(src).unwrap()).unwrap().main, "a");
        let src = "node a() returns (); let tel node b() returns (); let tel";
        assert_eq!(parse(&lex(src).unwrap()).unwrap().main, "b");
    }
}

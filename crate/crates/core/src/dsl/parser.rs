use crate::diag::Diagnostic;
use crate::dsl::lexer::{lex, syntax, Tok, Token};
use crate::model::*;

/// Identifiers that start declarations or statements and cannot name entities.
pub const RESERVED: [&str; 14] = [
    "type", "states", "data", "func", "class", "param", "effect", "pre", "post", "abstract",
    "require", "restrict", "init", "len",
];

/// Either a parsed specification or the E000 diagnostics that prevented it.
pub type ParseOutcome = Result<Specification, Vec<Diagnostic>>;

type PResult<T> = Result<T, Diagnostic>;

const MAX_EXPR_DEPTH: usize = 200;

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            depth: 0,
        }
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)].tok
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub(crate) fn error<T>(&self, expected: &str) -> PResult<T> {
        let t = self.peek();
        Err(syntax(
            t.loc,
            format!("expected {expected}, found {}", t.tok.describe()),
        ))
    }

    pub(crate) fn is_word(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w == word)
    }

    pub(crate) fn is_sym(&self, sym: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(s) if *s == sym)
    }

    pub(crate) fn eat_word(&mut self, word: &str) -> bool {
        if self.is_word(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> PResult<Loc> {
        if self.is_word(word) {
            Ok(self.bump().loc)
        } else {
            self.error(&format!("`{word}`"))
        }
    }

    pub(crate) fn expect_sym(&mut self, sym: &str) -> PResult<Loc> {
        if self.is_sym(sym) {
            Ok(self.bump().loc)
        } else {
            self.error(&format!("`{sym}`"))
        }
    }

    /// Any identifier that is not a reserved word.
    pub(crate) fn ident(&mut self) -> PResult<(String, Loc)> {
        match &self.peek().tok {
            Tok::Ident(w) if !RESERVED.contains(&w.as_str()) => {
                let t = self.bump();
                let Tok::Ident(w) = t.tok else { unreachable!() };
                Ok((w, t.loc))
            }
            _ => self.error("identifier"),
        }
    }

    /// An identifier that names a new entity (`$state` is reserved).
    fn decl_ident(&mut self) -> PResult<(String, Loc)> {
        let loc = self.peek().loc;
        let (id, loc2) = self.ident()?;
        if id.starts_with('$') {
            return Err(syntax(
                loc,
                format!("`{id}` is reserved and cannot be declared"),
            ));
        }
        Ok((id, loc2))
    }

    fn one_of(&mut self, words: &[&'static str]) -> PResult<&'static str> {
        for w in words {
            if self.eat_word(w) {
                return Ok(w);
            }
        }
        let expected: Vec<String> = words.iter().map(|w| format!("`{w}`")).collect();
        self.error(&expected.join(" or "))
    }

    fn at_top_level_keyword(&self) -> bool {
        self.is_word("type")
            || self.is_word("data")
            || self.is_word("func")
            || (self.is_word("states") && matches!(self.peek_at(1), Tok::Sym("{")))
    }

    fn recover(&mut self) {
        self.bump();
        while !self.at_eof() && !self.at_top_level_keyword() {
            self.bump();
        }
    }

    pub(crate) fn spec(&mut self) -> ParseOutcome {
        let mut decls = Vec::new();
        let mut errors = Vec::new();
        let mut seen_states = false;
        while !self.at_eof() {
            match self.decl() {
                Ok(Decl::States(s)) if seen_states => {
                    errors.push(syntax(s.loc, "at most one `states` declaration is allowed"));
                }
                Ok(d) => {
                    seen_states |= matches!(d, Decl::States(_));
                    decls.push(d);
                }
                Err(e) => {
                    errors.push(e);
                    self.recover();
                }
            }
        }
        if errors.is_empty() {
            Ok(Specification { decls })
        } else {
            Err(errors)
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        if self.is_word("type") {
            self.type_decl().map(Decl::Type)
        } else if self.is_word("states") {
            self.state_decl().map(Decl::States)
        } else if self.is_word("data") {
            self.data_decl().map(Decl::Data)
        } else if self.is_word("func") {
            self.func_decl().map(Decl::Func)
        } else {
            self.error("`type`, `states`, `data` or `func`")
        }
    }

    fn base_kind(&mut self) -> PResult<BaseKind> {
        Ok(match self.one_of(&["int", "real", "string"])? {
            "int" => BaseKind::Int,
            "real" => BaseKind::Real,
            _ => BaseKind::String,
        })
    }

    fn type_decl(&mut self) -> PResult<DataType> {
        let loc = self.expect_word("type")?;
        let (id, _) = self.decl_ident()?;
        let base = if self.eat_word("record") {
            self.expect_sym("{")?;
            let mut fields = Vec::new();
            loop {
                let (name, floc) = self.ident()?;
                self.expect_sym(":")?;
                let base = self.base_kind()?;
                fields.push(Field {
                    name,
                    base,
                    loc: floc,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            TypeBase::Record(fields)
        } else {
            match self.base_kind() {
                Ok(b) => TypeBase::Scalar(b),
                Err(_) => return self.error("`int`, `real`, `string` or `record`"),
            }
        };
        Ok(DataType { id, base, loc })
    }

    fn ident_list(&mut self, close: &str) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if self.is_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?.0);
            if !self.eat_sym(",") {
                break;
            }
        }
        Ok(out)
    }

    fn state_decl(&mut self) -> PResult<StateDecl> {
        let loc = self.expect_word("states")?;
        self.expect_sym("{")?;
        if self.is_sym("}") {
            return self.error("state name");
        }
        let states = self.ident_list("}")?;
        self.expect_sym("}")?;
        Ok(StateDecl { states, loc })
    }

    fn data_decl(&mut self) -> PResult<DataElement> {
        let loc = self.expect_word("data")?;
        let (id, _) = self.decl_ident()?;
        self.expect_sym(":")?;
        let (type_ref, _) = self.ident()?;
        let restriction = self.restrictions()?;
        let init = if self.eat_word("init") {
            if self.eat_word("allocated") {
                Init::Allocated
            } else if self.eat_word("defined") {
                Init::Defined
            } else {
                Init::Known(self.literal()?)
            }
        } else {
            Init::Unallocated
        };
        Ok(DataElement {
            id,
            type_ref,
            restriction,
            init,
            loc,
        })
    }

    /// A possibly negative literal.
    pub(crate) fn literal(&mut self) -> PResult<Literal> {
        if let Tok::Str(_) = self.peek().tok {
            let Tok::Str(s) = self.bump().tok else {
                unreachable!()
            };
            return Ok(Literal::Str(s));
        }
        match self.number()? {
            Number::Int(i) => Ok(Literal::Int(i)),
            Number::Real(r) => Ok(Literal::Real(r)),
        }
    }

    fn number(&mut self) -> PResult<Number> {
        let start = self.peek().loc;
        let negative = self.eat_sym("-");
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                let v = if negative { -(v as i128) } else { v as i128 };
                i64::try_from(v)
                    .map(Number::Int)
                    .map_err(|_| syntax(start, "integer literal out of range"))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Number::Real(if negative { -r } else { r }))
            }
            _ => self.error("literal"),
        }
    }

    fn natural(&mut self) -> PResult<u64> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.error("non-negative integer"),
        }
    }

    fn cmp(&mut self) -> PResult<&'static str> {
        for sym in ["<=", ">=", "<", ">"] {
            if self.eat_sym(sym) {
                return Ok(sym);
            }
        }
        self.error("comparison `<`, `<=`, `>` or `>=`")
    }

    /// Zero or more `restrict` clauses folded into one restriction.
    fn restrictions(&mut self) -> PResult<Restriction> {
        let mut acc = Partial::default();
        let loc = self.peek().loc;
        while self.is_word("restrict") {
            self.restriction_clause(&mut acc)?;
        }
        acc.finish(loc)
    }

    fn restriction_clause(&mut self, acc: &mut Partial) -> PResult<()> {
        let loc = self.expect_word("restrict")?;
        if self.eat_word("length") {
            let op = self.cmp()?;
            let n = self.natural()?;
            return match op {
                "<=" => acc.set_max(n, loc),
                "<" => match n.checked_sub(1) {
                    Some(m) => acc.set_max(m, loc),
                    // `length < 0` admits nothing.
                    None => acc.set_min(1, loc).and_then(|_| acc.set_max(0, loc)),
                },
                ">=" => acc.set_min(n, loc),
                _ => match n.checked_add(1) {
                    Some(m) => acc.set_min(m, loc),
                    None => Err(syntax(loc, "length bound out of range")),
                },
            };
        }
        if self.eat_word("value") {
            let op = self.cmp()?;
            let v = self.number()?;
            return acc.value_bound(op, v, loc);
        }
        let first = self.number()?;
        let op = self.cmp()?;
        self.expect_word("value")?;
        // `lit < value` reads as `value > lit`.
        let flipped = match op {
            "<" => ">",
            "<=" => ">=",
            ">" => "<",
            _ => "<=",
        };
        acc.value_bound(flipped, first, loc)?;
        if matches!(self.peek().tok, Tok::Sym("<" | "<=" | ">" | ">=")) {
            let op2 = self.cmp()?;
            let second = self.number()?;
            acc.value_bound(op2, second, loc)?;
        }
        Ok(())
    }

    fn func_decl(&mut self) -> PResult<FunctionSpec> {
        let loc = self.expect_word("func")?;
        let (id, _) = self.decl_ident()?;
        self.expect_sym("{")?;
        let classification = self.classification()?;
        let mut params = Vec::new();
        while self.is_word("param") {
            params.push(self.param()?);
        }
        let mut effects = Vec::new();
        while self.is_word("effect") {
            effects.push(self.effect()?);
        }
        if !self.is_sym("}") {
            return self.error("`param`, `effect` or `}`");
        }
        self.bump();
        Ok(FunctionSpec {
            id,
            classification,
            params,
            effects,
            loc,
        })
    }

    fn classification(&mut self) -> PResult<Classification> {
        let loc = self.expect_word("class")?;
        let descriptor = |p: &mut Parser, name: &str| -> PResult<String> {
            p.expect_word(name)?;
            p.expect_sym("=")?;
            Ok(p.ident()?.0)
        };
        let category = descriptor(self, "category")?;
        let group = descriptor(self, "group")?;
        let level = descriptor(self, "level")?;
        self.expect_word("states")?;
        self.expect_sym("=")?;
        self.expect_sym("[")?;
        let states = self.ident_list("]")?;
        self.expect_sym("]")?;
        Ok(Classification {
            category,
            group,
            level,
            states,
            loc,
        })
    }

    fn param(&mut self) -> PResult<ParamRef> {
        let loc = self.expect_word("param")?;
        let (element, _) = self.ident()?;
        let direction = match self.one_of(&["inout", "in", "out"])? {
            "in" => Direction::In,
            "out" => Direction::Out,
            _ => Direction::InOut,
        };
        let implicit = self.eat_word("implicit");
        Ok(ParamRef {
            element,
            direction,
            implicit,
            loc,
        })
    }

    pub(crate) fn status(&mut self) -> PResult<Status> {
        let word = self.one_of(&["unallocated", "allocated", "defined", "known"])?;
        Ok(Status::from_keyword(word).expect("status keyword"))
    }

    fn effect(&mut self) -> PResult<Effect> {
        let loc = self.expect_word("effect")?;
        let (id, _) = self.decl_ident()?;
        self.expect_sym("{")?;
        let mut pre = Vec::new();
        while self.is_word("pre") {
            let ploc = self.bump().loc;
            let (element, _) = self.ident()?;
            let required = self.status()?;
            let restriction = if self.is_word("restrict") {
                Some(self.restrictions()?)
            } else {
                None
            };
            pre.push(PreCondition {
                element,
                required,
                restriction,
                loc: ploc,
            });
        }
        let mut post = Vec::new();
        while self.is_word("post") {
            let ploc = self.bump().loc;
            let (element, _) = self.ident()?;
            let resulting = self.status()?;
            post.push(PostCondition {
                element,
                resulting,
                loc: ploc,
            });
        }
        let body = if self.eat_word("abstract") {
            EffectBody::Abstract
        } else {
            let mut stmts = Vec::new();
            while !self.is_sym("}") {
                if self.at_eof() {
                    return self.error("`}`");
                }
                stmts.push(self.statement()?);
            }
            EffectBody::Transform(stmts)
        };
        self.expect_sym("}")?;
        Ok(Effect {
            id,
            pre,
            post,
            body,
            loc,
        })
    }

    fn statement(&mut self) -> PResult<Statement> {
        let loc = self.peek().loc;
        if self.eat_word("require") {
            let left = self.expr()?;
            let op = self.relop()?;
            let right = self.expr()?;
            return Ok(Statement::Require {
                left,
                op,
                right,
                loc,
            });
        }
        let (target, _) = match self.ident() {
            Ok(t) => t,
            Err(_) => return self.error("statement, `pre`/`post` (before statements) or `}`"),
        };
        self.expect_sym(":=")?;
        let expr = self.expr()?;
        Ok(Statement::Assign { target, expr, loc })
    }

    pub(crate) fn relop(&mut self) -> PResult<RelOp> {
        if let Tok::Sym(s) = self.peek().tok {
            if let Some(op) = RelOp::from_symbol(s) {
                self.bump();
                return Ok(op);
            }
        }
        self.error("relational operator")
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym("++") {
                BinOp::Concat
            } else if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if self.depth >= MAX_EXPR_DEPTH {
            return self.error("a less deeply nested expression");
        }
        self.depth += 1;
        let result = self.factor_inner();
        self.depth -= 1;
        result
    }

    fn factor_inner(&mut self) -> PResult<Expr> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if self.is_word("len") {
            self.bump();
            self.expect_sym("(")?;
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(Expr::Len(Box::new(e)));
        }
        match self.peek().tok.clone() {
            Tok::Int(_) | Tok::Real(_) | Tok::Str(_) => Ok(Expr::Lit(self.literal()?)),
            Tok::Ident(_) => Ok(Expr::Ref(self.ident()?.0)),
            _ => self.error("expression"),
        }
    }
}

/// Accumulates `restrict` clauses, rejecting a bound given twice.
#[derive(Default)]
struct Partial {
    lower: Option<Bound>,
    upper: Option<Bound>,
    min: Option<u64>,
    max: Option<u64>,
}

impl Partial {
    fn value_bound(&mut self, op: &str, v: Number, loc: Loc) -> PResult<()> {
        let (slot, bound) = match op {
            ">" => (&mut self.lower, Bound::exclusive(v)),
            ">=" => (&mut self.lower, Bound::inclusive(v)),
            "<" => (&mut self.upper, Bound::exclusive(v)),
            _ => (&mut self.upper, Bound::inclusive(v)),
        };
        if slot.is_some() {
            return Err(syntax(loc, "bound given more than once"));
        }
        *slot = Some(bound);
        Ok(())
    }

    fn set_min(&mut self, n: u64, loc: Loc) -> PResult<()> {
        if self.min.replace(n).is_some() {
            return Err(syntax(loc, "length bound given more than once"));
        }
        Ok(())
    }

    fn set_max(&mut self, n: u64, loc: Loc) -> PResult<()> {
        if self.max.replace(n).is_some() {
            return Err(syntax(loc, "length bound given more than once"));
        }
        Ok(())
    }

    fn finish(self, loc: Loc) -> PResult<Restriction> {
        let numeric = self.lower.is_some() || self.upper.is_some();
        let length = self.min.is_some() || self.max.is_some();
        match (numeric, length) {
            (true, true) => Err(syntax(
                loc,
                "value and length restrictions cannot be combined",
            )),
            (true, false) => Ok(Restriction::range(self.lower, self.upper)),
            (false, true) => Ok(Restriction::StringLength {
                min: self.min.unwrap_or(0),
                max: self.max,
            }),
            (false, false) => Ok(Restriction::Unrestricted),
        }
    }
}

/// Parses a specification source text.
pub fn parse_spec(text: &str) -> ParseOutcome {
    let (tokens, lex_errors) = lex(text);
    let result = Parser::new(tokens).spec();
    match (result, lex_errors.is_empty()) {
        (Ok(spec), true) => Ok(spec),
        (Ok(_), false) => Err(lex_errors),
        (Err(mut errors), _) => {
            errors.extend(lex_errors);
            crate::diag::sort_diagnostics(&mut errors);
            Err(errors)
        }
    }
}

/// Parses raw bytes; invalid UTF-8 is a syntax error.
pub fn parse_spec_bytes(bytes: &[u8]) -> ParseOutcome {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_spec(text),
        Err(e) => {
            let prefix = &bytes[..e.valid_up_to()];
            let line = 1 + prefix.iter().filter(|b| **b == b'\n').count() as u32;
            Err(vec![syntax(Loc::new(line, 1), "source is not valid UTF-8")])
        }
    }
}

/// Parses a literal in source syntax (`3`, `-2.5`, `"text"`).
pub fn parse_literal(text: &str) -> Result<Literal, Diagnostic> {
    let (tokens, mut errors) = lex(text);
    if let Some(e) = errors.pop() {
        return Err(e);
    }
    let mut p = Parser::new(tokens);
    let lit = p.literal()?;
    if !p.at_eof() {
        return p.error("end of literal");
    }
    Ok(lit)
}

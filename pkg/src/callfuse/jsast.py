"""Tokenizer and parser for a restricted JavaScript subset.

The subset covers what the call-graph extractor needs: function
declarations/expressions, arrow functions, variable declarations,
assignments, (member) call expressions, return statements, object/array
literals, and blocks. Constructs outside the subset (classes, control flow,
modules syntax) are skipped with a diagnostic rather than failing the file.

Function identity follows the position of the `function` keyword, or the
start of an arrow's parameter list; every downstream consumer (metric CSVs,
dynamic traces) must agree on this convention for positions to join.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from callfuse.graph import SourcePosition, normalize_path


class JsParseError(ValueError):
    pass


KEYWORDS = {
    "var", "let", "const", "function", "return", "if", "else", "for", "while",
    "do", "switch", "case", "break", "continue", "new", "typeof", "instanceof",
    "in", "of", "class", "extends", "import", "export", "from", "try", "catch",
    "finally", "throw", "delete", "void", "yield", "async", "await", "this",
    "true", "false", "null", "undefined", "super", "default", "static", "get",
    "set", "with",
}

# Statement-leading keywords the subset does not model; skipped whole.
SKIP_STATEMENT_KEYWORDS = {
    "if", "else", "for", "while", "do", "switch", "case", "break", "continue",
    "try", "catch", "finally", "throw", "class", "import", "export", "with",
    "default",
}

VALUE_KEYWORDS = {"this", "true", "false", "null", "undefined", "super"}
PREFIX_KEYWORDS = {"new", "typeof", "delete", "void", "await", "yield"}

_PUNCTS = (
    "...", "===", "!==", "**=", ">>>", "<<=", ">>=", "&&=", "||=", "??=",
    "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "**", "<<", ">>", "&=", "|=", "^=", "?.",
    "(", ")", "{", "}", "[", "]", ";", ",", ".", ":", "?", "=", "+", "-",
    "*", "/", "%", "<", ">", "!", "&", "|", "^", "~",
)

BINARY_PUNCTS = {
    "+", "-", "*", "/", "%", "**", "<", ">", "<=", ">=", "==", "!=", "===",
    "!==", "&&", "||", "??", "&", "|", "^", "<<", ">>", ">>>", "instanceof",
    "in", "?", ":",
}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | string | template | number | punct
    value: str
    line: int
    col: int


@dataclass
class FunctionDef:
    id: SourcePosition
    name: str | None
    params: tuple[str, ...]
    parent: int | None  # index of enclosing function within the same file
    kind: str  # declaration | expression | arrow
    end_line: int = 0
    declared: set[str] = field(default_factory=set)  # names declared in this scope


@dataclass(frozen=True)
class NameBinding:
    name: str
    func: int
    scope: int | None  # None = module scope


@dataclass(frozen=True)
class PropertyBinding:
    """A function value (direct or via identifier) assigned to a property name."""

    prop: str
    func: int | None
    alias: str | None
    scope: int | None


@dataclass(frozen=True)
class CallSite:
    site: SourcePosition
    caller: int | None  # enclosing function index, None = module top level
    kind: str  # plain | member | computed | iife
    callee: str | None  # name (plain) or property name (member)
    func: int | None = None  # immediately-invoked function value (iife)


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.message}"


@dataclass
class JsSubsetAst:
    file: str
    functions: list[FunctionDef] = field(default_factory=list)
    bindings: list[NameBinding] = field(default_factory=list)
    prop_bindings: list[PropertyBinding] = field(default_factory=list)
    calls: list[CallSite] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    module_declared: set[str] = field(default_factory=set)


def tokenize(source: str, file: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    brace_stack: list[tuple[int, int]] = []

    def advance(text: str) -> None:
        nonlocal line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            i += 1
            continue
        if source.startswith("//", i):
            end = source.find("\n", i)
            end = n if end == -1 else end
            advance(source[i:end])
            i = end
            continue
        if source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end == -1:
                raise JsParseError(f"{file}:{line}:{col}: unterminated block comment")
            advance(source[i : end + 2])
            i = end + 2
            continue
        if ch in "'\"":
            j, text = _scan_string(source, i, ch, file, line, col)
            tokens.append(Token("string", text, line, col))
            advance(source[i:j])
            i = j
            continue
        if ch == "`":
            j = _scan_template(source, i, file, line, col)
            tokens.append(Token("template", source[i:j], line, col))
            advance(source[i:j])
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] in "._xXbBoOeE+-"):
                if source[j] in "+-" and source[j - 1] not in "eE":
                    break
                j += 1
            tokens.append(Token("number", source[i:j], line, col))
            advance(source[i:j])
            i = j
            continue
        if ch.isalpha() or ch in "_$":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] in "_$"):
                j += 1
            word = source[i:j]
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, line, col))
            advance(word)
            i = j
            continue
        for punct in _PUNCTS:
            if source.startswith(punct, i):
                if punct == "{":
                    brace_stack.append((line, col))
                elif punct == "}":
                    if not brace_stack:
                        raise JsParseError(f"{file}:{line}:{col}: unbalanced '}}'")
                    brace_stack.pop()
                tokens.append(Token("punct", punct, line, col))
                advance(punct)
                i += len(punct)
                break
        else:
            raise JsParseError(f"{file}:{line}:{col}: unexpected character {ch!r}")

    if brace_stack:
        bl, bc = brace_stack[-1]
        raise JsParseError(f"{file}:{bl}:{bc}: unbalanced '{{'")
    return tokens


def _scan_string(source: str, i: int, quote: str, file: str, line: int, col: int) -> tuple[int, str]:
    j = i + 1
    n = len(source)
    while j < n:
        if source[j] == "\\":
            j += 2
            continue
        if source[j] == quote:
            return j + 1, source[i : j + 1]
        if source[j] == "\n":
            break
        j += 1
    raise JsParseError(f"{file}:{line}:{col}: unterminated string literal")


def _scan_template(source: str, i: int, file: str, line: int, col: int) -> int:
    # Whole template (including ${...} interiors) becomes one opaque token.
    j = i + 1
    n = len(source)
    depth = 0
    while j < n:
        ch = source[j]
        if ch == "\\":
            j += 2
            continue
        if source.startswith("${", j):
            depth += 1
            j += 2
            continue
        if ch == "}" and depth > 0:
            depth -= 1
            j += 1
            continue
        if ch == "`" and depth == 0:
            return j + 1
        j += 1
    raise JsParseError(f"{file}:{line}:{col}: unterminated template literal")


@dataclass
class _ExprInfo:
    kind: str = "other"  # function | ident | other
    func: int | None = None
    name: str | None = None


class _Parser:
    def __init__(self, tokens: list[Token], file: str):
        self.tokens = tokens
        self.file = file
        self.i = 0
        self.ast = JsSubsetAst(file=file)

    # -- token helpers --

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at_punct(self, *values: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "punct" and tok.value in values

    def at_keyword(self, *values: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "keyword" and tok.value in values

    def expect_punct(self, value: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "punct" or tok.value != value:
            where = f"{tok.line}:{tok.col}" if tok else "end of file"
            raise JsParseError(f"{self.file}:{where}: expected {value!r}")
        return self.next()

    def diagnostic(self, tok: Token, message: str) -> None:
        self.ast.diagnostics.append(Diagnostic(self.file, tok.line, tok.col, message))

    def declared_names(self, scope: int | None) -> set[str]:
        if scope is None:
            return self.ast.module_declared
        return self.ast.functions[scope].declared

    # -- statements --

    def parse_module(self) -> JsSubsetAst:
        while self.peek() is not None:
            self.parse_statement(None)
        return self.ast

    def parse_statement(self, scope: int | None) -> None:
        tok = self.peek()
        if tok is None:
            return
        if tok.kind == "punct" and tok.value == ";":
            self.next()
            return
        if tok.kind == "punct" and tok.value == "{":
            self.next()
            while not self.at_punct("}"):
                if self.peek() is None:
                    raise JsParseError(f"{self.file}: unexpected end of file in block")
                self.parse_statement(scope)
            self.next()
            return
        if tok.kind == "keyword":
            if tok.value == "function" or (tok.value == "async" and self._is_async_function()):
                self.parse_function(scope, is_statement=True)
                return
            if tok.value in ("var", "let", "const"):
                self.parse_var_decl(scope)
                return
            if tok.value == "return":
                self.next()
                if not (self.at_punct(";", "}") or self.peek() is None):
                    self.parse_expression(scope)
                if self.at_punct(";"):
                    self.next()
                return
            if tok.value in SKIP_STATEMENT_KEYWORDS:
                self.skip_construct(tok)
                return
        # expression statement (assignments, calls)
        self.parse_expression(scope)
        if self.at_punct(";"):
            self.next()

    def _is_async_function(self) -> bool:
        nxt = self.peek(1)
        return nxt is not None and nxt.kind == "keyword" and nxt.value == "function"

    def skip_construct(self, tok: Token) -> None:
        """Consume a statement outside the subset: keyword, optional (...) and {...}."""
        self.diagnostic(tok, f"'{tok.value}' statement outside subset; skipped")
        self.next()
        while True:
            cur = self.peek()
            if cur is None:
                return
            if cur.kind == "punct":
                if cur.value == "(":
                    self._skip_balanced("(", ")")
                    continue
                if cur.value == "{":
                    self._skip_balanced("{", "}")
                    return
                if cur.value == ";":
                    self.next()
                    return
                if cur.value == "}":
                    return
            if cur.kind == "keyword" and cur.value in SKIP_STATEMENT_KEYWORDS and cur.value != "else":
                return
            self.next()

    def _skip_balanced(self, open_p: str, close_p: str) -> None:
        depth = 0
        while True:
            tok = self.peek()
            if tok is None:
                raise JsParseError(f"{self.file}: unexpected end of file, unbalanced {open_p!r}")
            self.next()
            if tok.kind == "punct":
                if tok.value == open_p:
                    depth += 1
                elif tok.value == close_p:
                    depth -= 1
                    if depth == 0:
                        return

    def parse_var_decl(self, scope: int | None) -> None:
        self.next()  # var/let/const
        while True:
            tok = self.peek()
            if tok is None:
                return
            if tok.kind == "punct" and tok.value in ("{", "["):
                self.diagnostic(tok, "destructuring declaration outside subset; skipped")
                self._skip_balanced(tok.value, "}" if tok.value == "{" else "]")
                name = None
            elif tok.kind in ("ident", "keyword"):
                name = tok.value
                self.declared_names(scope).add(name)
                self.next()
            else:
                name = None
                self.next()
            if self.at_punct("="):
                self.next()
                info = self.parse_expression(scope, binding_hint=name, stop_at_comma=True)
                if name is not None and info.kind == "function" and info.func is not None:
                    self.ast.bindings.append(NameBinding(name, info.func, scope))
            if self.at_punct(","):
                self.next()
                continue
            if self.at_punct(";"):
                self.next()
            return

    # -- functions --

    def parse_function(self, scope: int | None, is_statement: bool, name_hint: str | None = None) -> int:
        if self.at_keyword("async"):
            self.next()
        kw = self.next()  # 'function'
        pos = SourcePosition(self.file, kw.line, kw.col)
        if self.at_punct("*"):
            self.next()
        name = None
        tok = self.peek()
        if tok is not None and tok.kind == "ident":
            name = tok.value
            self.next()
        params = self.parse_param_list()
        func_idx = self._new_function(pos, name or name_hint, params, scope,
                                      "declaration" if is_statement and name else "expression")
        if name is not None:
            self.declared_names(scope).add(name)
            self.ast.bindings.append(NameBinding(name, func_idx, scope))
        end = self.parse_block_body(func_idx)
        self.ast.functions[func_idx].end_line = end
        return func_idx

    def parse_arrow(self, scope: int | None, name_hint: str | None) -> int:
        start = self.peek()
        assert start is not None
        pos = SourcePosition(self.file, start.line, start.col)
        if start.kind == "punct" and start.value == "(":
            params = self.parse_param_list()
        else:
            params = (start.value,)
            self.next()
        self.expect_punct("=>")
        func_idx = self._new_function(pos, name_hint, params, scope, "arrow")
        for p in params:
            self.ast.functions[func_idx].declared.add(p)
        if self.at_punct("{"):
            end = self.parse_block_body(func_idx)
        else:
            self.parse_expression(func_idx, stop_at_comma=True)
            last = self.tokens[self.i - 1] if self.i > 0 else start
            end = last.line
        self.ast.functions[func_idx].end_line = end
        return func_idx

    def _new_function(self, pos: SourcePosition, name: str | None,
                      params: tuple[str, ...], parent: int | None, kind: str) -> int:
        func = FunctionDef(id=pos, name=name, params=params, parent=parent, kind=kind)
        func.declared.update(params)
        self.ast.functions.append(func)
        return len(self.ast.functions) - 1

    def parse_param_list(self) -> tuple[str, ...]:
        self.expect_punct("(")
        params: list[str] = []
        depth = 1
        while depth > 0:
            tok = self.peek()
            if tok is None:
                raise JsParseError(f"{self.file}: unexpected end of file in parameter list")
            if tok.kind == "punct":
                if tok.value == "(":
                    depth += 1
                elif tok.value == ")":
                    depth -= 1
            elif tok.kind == "ident" and depth == 1:
                prev = self.tokens[self.i - 1]
                # plain parameter names only: after '(' ',' or '...'
                if prev.kind == "punct" and prev.value in ("(", ",", "..."):
                    params.append(tok.value)
            self.next()
        return tuple(params)

    def parse_block_body(self, func_idx: int) -> int:
        self.expect_punct("{")
        while not self.at_punct("}"):
            if self.peek() is None:
                raise JsParseError(f"{self.file}: unexpected end of file in function body")
            self.parse_statement(func_idx)
        closing = self.next()
        return closing.line

    # -- expressions --

    def parse_expression(self, scope: int | None, binding_hint: str | None = None,
                         stop_at_comma: bool = False) -> _ExprInfo:
        info = self.parse_operand(scope, binding_hint)
        while True:
            tok = self.peek()
            if tok is None:
                return info
            if tok.kind == "punct" and tok.value == "=":
                self.next()
                rhs = self.parse_expression(scope, binding_hint=info.name or binding_hint,
                                            stop_at_comma=stop_at_comma)
                self._record_assignment(scope, info, rhs)
                return rhs
            if tok.kind == "punct" and tok.value in ("+=", "-=", "*=", "/=", "%=", "**=",
                                                     "&&=", "||=", "??=", "&=", "|=", "^=",
                                                     "<<=", ">>="):
                self.next()
                info = self.parse_expression(scope, stop_at_comma=stop_at_comma)
                return info
            if (tok.kind == "punct" and tok.value in BINARY_PUNCTS) or (
                tok.kind == "keyword" and tok.value in ("instanceof", "in")
            ):
                self.next()
                info = _merge_other(info, self.parse_operand(scope, None))
                continue
            if tok.kind == "punct" and tok.value == "," and not stop_at_comma:
                self.next()
                info = self.parse_expression(scope)
                continue
            return info

    def _record_assignment(self, scope: int | None, lhs: _ExprInfo, rhs: _ExprInfo) -> None:
        if rhs.kind == "function" and rhs.func is not None:
            if lhs.kind == "ident" and lhs.name:
                self.ast.bindings.append(NameBinding(lhs.name, rhs.func, scope))
            elif lhs.kind == "member" and lhs.name:
                self.ast.prop_bindings.append(PropertyBinding(lhs.name, rhs.func, None, scope))
        elif lhs.kind == "member" and lhs.name and rhs.kind == "ident" and rhs.name:
            self.ast.prop_bindings.append(PropertyBinding(lhs.name, None, rhs.name, scope))

    def parse_operand(self, scope: int | None, binding_hint: str | None) -> _ExprInfo:
        tok = self.peek()
        if tok is None:
            return _ExprInfo()
        while tok.kind == "keyword" and tok.value in PREFIX_KEYWORDS or (
            tok.kind == "punct" and tok.value in ("!", "-", "+", "~", "++", "--", "...")
        ):
            self.next()
            tok = self.peek()
            if tok is None:
                return _ExprInfo()
        if tok.kind == "keyword" and tok.value == "async":
            nxt = self.peek(1)
            if nxt is not None and (
                (nxt.kind == "punct" and nxt.value == "(") or nxt.kind == "ident"
            ):
                self.next()  # async arrow
                tok = self.peek()
        info = self.parse_primary(scope, binding_hint, tok)
        return self.parse_trailers(scope, info)

    def parse_primary(self, scope: int | None, binding_hint: str | None, tok: Token) -> _ExprInfo:
        if tok.kind == "keyword" and tok.value in ("function", "async"):
            idx = self.parse_function(scope, is_statement=False, name_hint=binding_hint)
            return _ExprInfo(kind="function", func=idx)
        if tok.kind == "punct" and tok.value == "(":
            if self._is_arrow_ahead():
                idx = self.parse_arrow(scope, binding_hint)
                return _ExprInfo(kind="function", func=idx)
            self.next()
            inner = self.parse_expression(scope)
            if self.at_punct(")"):
                self.next()
            return inner
        if tok.kind == "ident":
            nxt = self.peek(1)
            if nxt is not None and nxt.kind == "punct" and nxt.value == "=>":
                idx = self.parse_arrow(scope, binding_hint)
                return _ExprInfo(kind="function", func=idx)
            self.next()
            return _ExprInfo(kind="ident", name=tok.value)
        if tok.kind == "punct" and tok.value == "{":
            self.parse_object_literal(scope)
            return _ExprInfo(kind="other")
        if tok.kind == "punct" and tok.value == "[":
            self.next()
            while not self.at_punct("]"):
                if self.peek() is None:
                    raise JsParseError(f"{self.file}: unexpected end of file in array literal")
                self.parse_expression(scope, stop_at_comma=True)
                if self.at_punct(","):
                    self.next()
            self.next()
            return _ExprInfo(kind="other")
        if tok.kind in ("string", "template", "number"):
            self.next()
            return _ExprInfo(kind="other")
        if tok.kind == "keyword" and tok.value in VALUE_KEYWORDS:
            self.next()
            return _ExprInfo(kind="ident", name=tok.value)
        # Unusable token in expression position; consume to make progress.
        self.next()
        return _ExprInfo(kind="other")

    def _is_arrow_ahead(self) -> bool:
        depth = 0
        j = self.i
        while j < len(self.tokens):
            tok = self.tokens[j]
            if tok.kind == "punct":
                if tok.value == "(":
                    depth += 1
                elif tok.value == ")":
                    depth -= 1
                    if depth == 0:
                        nxt = self.tokens[j + 1] if j + 1 < len(self.tokens) else None
                        return nxt is not None and nxt.kind == "punct" and nxt.value == "=>"
            j += 1
        return False

    def parse_trailers(self, scope: int | None, info: _ExprInfo) -> _ExprInfo:
        while True:
            tok = self.peek()
            if tok is None:
                return info
            if tok.kind == "punct" and tok.value in (".", "?."):
                self.next()
                prop = self.peek()
                if prop is not None and prop.kind in ("ident", "keyword"):
                    self.next()
                    info = _ExprInfo(kind="member", name=prop.value)
                else:
                    info = _ExprInfo(kind="other")
                continue
            if tok.kind == "punct" and tok.value == "[":
                self._skip_subscript(scope)
                info = _ExprInfo(kind="computed")
                continue
            if tok.kind == "punct" and tok.value == "(":
                self._record_call(scope, info, tok)
                self.parse_arguments(scope)
                info = _ExprInfo(kind="other")
                continue
            if tok.kind == "template":  # tagged template
                self.next()
                info = _ExprInfo(kind="other")
                continue
            if tok.kind == "punct" and tok.value in ("++", "--"):
                self.next()
                continue
            return info

    def _skip_subscript(self, scope: int | None) -> None:
        self.next()  # '['
        while not self.at_punct("]"):
            if self.peek() is None:
                raise JsParseError(f"{self.file}: unexpected end of file in subscript")
            self.parse_expression(scope, stop_at_comma=True)
            if self.at_punct(","):
                self.next()
        self.next()

    def _record_call(self, scope: int | None, callee: _ExprInfo, tok: Token) -> None:
        site = SourcePosition(self.file, tok.line, tok.col)
        if callee.kind == "ident" and callee.name:
            self.ast.calls.append(CallSite(site, scope, "plain", callee.name))
        elif callee.kind == "member" and callee.name:
            self.ast.calls.append(CallSite(site, scope, "member", callee.name))
        elif callee.kind == "function" and callee.func is not None:
            self.ast.calls.append(CallSite(site, scope, "iife", None, callee.func))
        else:
            # computed subscripts and calls on opaque results dispatch on a
            # runtime value; they can only be reported, not resolved
            self.ast.calls.append(CallSite(site, scope, "computed", None))

    def parse_arguments(self, scope: int | None) -> None:
        self.expect_punct("(")
        while not self.at_punct(")"):
            if self.peek() is None:
                raise JsParseError(f"{self.file}: unexpected end of file in arguments")
            self.parse_expression(scope, stop_at_comma=True)
            if self.at_punct(","):
                self.next()
        self.next()

    def parse_object_literal(self, scope: int | None) -> None:
        self.expect_punct("{")
        while not self.at_punct("}"):
            tok = self.peek()
            if tok is None:
                raise JsParseError(f"{self.file}: unexpected end of file in object literal")
            if tok.kind in ("ident", "keyword", "string", "number"):
                key = tok.value.strip("'\"") if tok.kind == "string" else tok.value
                nxt = self.peek(1)
                if nxt is not None and nxt.kind == "punct" and nxt.value == ":":
                    self.next()
                    self.next()
                    value = self.parse_expression(scope, binding_hint=key, stop_at_comma=True)
                    if value.kind == "function" and value.func is not None:
                        self.ast.prop_bindings.append(PropertyBinding(key, value.func, None, scope))
                    elif value.kind == "ident" and value.name:
                        self.ast.prop_bindings.append(PropertyBinding(key, None, value.name, scope))
                elif nxt is not None and nxt.kind == "punct" and nxt.value == "(":
                    # shorthand method: outside subset, but parse body for call sites
                    self.diagnostic(tok, "object shorthand method outside subset; body scanned")
                    self.next()
                    self.parse_param_list()
                    if self.at_punct("{"):
                        self._skip_balanced("{", "}")
                else:
                    # shorthand property {name}
                    self.next()
                    if tok.kind == "ident":
                        self.ast.prop_bindings.append(PropertyBinding(key, None, tok.value, scope))
            else:
                self.parse_expression(scope, stop_at_comma=True)
            if self.at_punct(","):
                self.next()
        self.next()


def _merge_other(left: _ExprInfo, right: _ExprInfo) -> _ExprInfo:
    return _ExprInfo(kind="other")


def parse_js_subset(source: bytes | str, file: str) -> JsSubsetAst:
    """Parse one file of the JavaScript subset into its analysis-ready form.

    Out-of-subset constructs become diagnostics, never crashes; unbalanced
    braces and unterminated literals raise JsParseError with a position.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    file = normalize_path(file)
    tokens = tokenize(source, file)
    return _Parser(tokens, file).parse_module()

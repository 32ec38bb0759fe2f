use super::*;
use crate::pysyntax::*;
use std::collections::{BTreeMap, VecDeque};
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq)]
struct Binding {
    value: Value,
    defs: Vec<usize>,
}

type Env = BTreeMap<String, Binding>;

struct Frame {
    env: Env,
    outer: Rc<Vec<Env>>,
    /// Set while executing a class body.
    class_body: Option<String>,
}

struct Deferred<'a> {
    params: &'a [Param],
    body: &'a [Stmt],
    outer: Rc<Vec<Env>>,
    /// First parameter binding for methods.
    self_value: Option<Value>,
}

#[derive(Default)]
struct ClassState {
    info_index: usize,
    class_attrs: BTreeMap<String, Value>,
    self_read: BTreeMap<String, Value>,
    self_write: BTreeMap<String, Value>,
    methods: Vec<(usize, bool)>, // (index into method list, is_classmethod/staticmethod)
}

/// Function name, parameters, body, enclosing scopes, decorators.
type Method<'a> = (String, &'a [Param], &'a [Stmt], Rc<Vec<Env>>, Vec<Expr>);

struct Interp<'a> {
    defs: Vec<Def>,
    def_index: BTreeMap<(String, Pos), usize>,
    uses: BTreeMap<(String, Pos), Use>,
    calls: BTreeMap<Pos, CallSite>,
    classes: Vec<ClassInfo>,
    class_state: BTreeMap<String, ClassState>,
    methods: Vec<Method<'a>>,
    imports: Vec<String>,
    named_assigns: Vec<(String, Value, Pos)>,
    keyed_assigns: BTreeMap<(Pos, String), KeyedAssign>,
    deferred: VecDeque<Deferred<'a>>,
    module_outer: Rc<Vec<Env>>,
    star_imports: Vec<String>,
}

const BUILTINS: &[&str] = &[
    "open", "str", "int", "float", "bool", "dict", "list", "tuple", "set", "repr", "input", "print", "len", "range",
    "object", "super", "isinstance", "getattr", "setattr", "hasattr", "type", "format", "enumerate", "zip", "map",
    "filter", "sorted", "min", "max", "sum", "any", "all", "iter", "next", "bytes", "vars", "staticmethod",
    "classmethod", "property", "Exception", "ValueError", "KeyError", "RuntimeError", "TypeError",
];

/// Run the abstract interpreter over a module.
pub fn build_def_use(module: &Module) -> DefUseGraph {
    let mut it = Interp {
        defs: Vec::new(),
        def_index: BTreeMap::new(),
        uses: BTreeMap::new(),
        calls: BTreeMap::new(),
        classes: Vec::new(),
        class_state: BTreeMap::new(),
        methods: Vec::new(),
        imports: Vec::new(),
        named_assigns: Vec::new(),
        keyed_assigns: BTreeMap::new(),
        deferred: VecDeque::new(),
        module_outer: Rc::new(Vec::new()),
        star_imports: Vec::new(),
    };
    let mut top = Frame { env: Env::new(), outer: Rc::new(Vec::new()), class_body: None };
    it.exec_block(&mut top, &module.body);
    let module_env = top.env.clone();
    it.module_outer = Rc::new(vec![module_env.clone()]);

    // Free functions first, then two passes over methods so that `self.*`
    // assignments in one method are visible in the others.
    it.drain_deferred();
    let class_names: Vec<String> = it.class_state.keys().cloned().collect();
    for pass in 0..2 {
        for cname in &class_names {
            let methods: Vec<usize> = it.class_state[cname].methods.iter().map(|(i, _)| *i).collect();
            let statics: Vec<bool> = it.class_state[cname].methods.iter().map(|(_, s)| *s).collect();
            for (mi, is_static) in methods.into_iter().zip(statics) {
                let (_, params, body, outer, _) = it.methods[mi].clone();
                let self_value = if is_static { None } else { Some(Value::Instance(cname.clone())) };
                it.run_function(params, body, outer, self_value);
            }
            let st = it.class_state.get_mut(cname).expect("class state");
            st.self_read = std::mem::take(&mut st.self_write);
            let _ = pass;
        }
        it.drain_deferred();
    }
    for cname in &class_names {
        let st = &it.class_state[cname];
        it.classes[st.info_index].self_attrs = st.self_read.clone();
    }

    let mut uses: Vec<Use> = it.uses.into_values().collect();
    uses.sort_by(|a, b| a.pos.cmp(&b.pos).then(a.name.cmp(&b.name)));
    let mut imports = it.imports;
    imports.sort();
    imports.dedup();
    DefUseGraph {
        defs: it.defs,
        uses,
        calls: it.calls.into_values().collect(),
        classes: it.classes,
        imports,
        globals: module_env.into_iter().map(|(k, b)| (k, b.value)).collect(),
        named_assigns: it.named_assigns,
        keyed_assigns: it.keyed_assigns.into_values().collect(),
    }
}

fn join_value(a: &Value, b: &Value) -> Value {
    if a == b {
        return a.clone();
    }
    match (a, b) {
        // `try: import x / except ImportError: x = None`
        (Value::Module(_), Value::NoneVal) => a.clone(),
        (Value::NoneVal, Value::Module(_)) => b.clone(),
        _ => match (a.text(), b.text()) {
            (Some(x), Some(y)) if x == y && std::mem::discriminant(a) == std::mem::discriminant(b) => a.clone(),
            _ => Value::Hole,
        },
    }
}

fn join_env(a: &Env, b: &Env) -> Env {
    let mut out = Env::new();
    for (k, va) in a {
        match b.get(k) {
            Some(vb) => {
                let mut defs = va.defs.clone();
                for d in &vb.defs {
                    if !defs.contains(d) {
                        defs.push(*d);
                    }
                }
                out.insert(k.clone(), Binding { value: join_value(&va.value, &vb.value), defs });
            }
            None => {
                out.insert(k.clone(), va.clone());
            }
        }
    }
    for (k, vb) in b {
        out.entry(k.clone()).or_insert_with(|| vb.clone());
    }
    out
}

fn concat(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => {
            let mut f = x.clone();
            f.extend(y.iter().cloned());
            Value::Str(f)
        }
        (Value::Seq(x), Value::Seq(y)) => {
            let mut v = x.clone();
            v.extend(y.iter().cloned());
            Value::Seq(v)
        }
        (Value::Num { text: x, .. }, Value::Num { text: y, .. }) => match (x.parse::<i64>(), y.parse::<i64>()) {
            (Ok(p), Ok(q)) => p.checked_add(q).map(|s| Value::Num { text: s.to_string(), pos: None }).unwrap_or(Value::Hole),
            _ => Value::Hole,
        },
        _ => Value::Hole,
    }
}

/// `str(v)` semantics restricted to values we can render exactly.
fn to_str(v: &Value) -> Value {
    match v {
        Value::Str(_) | Value::Num { .. } | Value::Bool(_) | Value::NoneVal => Value::Str(v.frags()),
        _ => Value::Str(vec![Frag::Hole]),
    }
}

/// `repr(v)` for plain strings and numbers.
fn to_repr(v: &Value) -> Value {
    match v {
        Value::Str(_) => match v.text() {
            Some(t) if t.chars().all(|c| c != '\'' && c != '\\' && !c.is_control()) => Value::lit(format!("'{t}'"), v.first_pos()),
            _ => Value::Str(vec![Frag::Hole]),
        },
        Value::Num { .. } | Value::Bool(_) | Value::NoneVal => to_str(v),
        _ => Value::Str(vec![Frag::Hole]),
    }
}

fn canonical_int(text: &str) -> Option<String> {
    let t = text.replace('_', "");
    let lower = t.to_ascii_lowercase();
    let parsed = if let Some(h) = lower.strip_prefix("0x") {
        i64::from_str_radix(h, 16).ok()
    } else if let Some(o) = lower.strip_prefix("0o") {
        i64::from_str_radix(o, 8).ok()
    } else if let Some(b) = lower.strip_prefix("0b") {
        i64::from_str_radix(b, 2).ok()
    } else if lower.chars().all(|c| c.is_ascii_digit()) {
        lower.parse::<i64>().ok()
    } else {
        None
    };
    parsed.map(|n| n.to_string())
}

/// printf-style `%` formatting.
fn percent_format(fmt: &[Frag], args: &Value) -> Value {
    let positional: Option<Vec<Value>> = match args {
        Value::Seq(items) => Some(items.clone()),
        Value::Dict(_) => None,
        Value::Hole | Value::Object { .. } | Value::Module(_) => return Value::Str(vec![Frag::Hole]),
        other => Some(vec![other.clone()]),
    };
    let mut out: Vec<Frag> = Vec::new();
    let mut next = 0usize;
    for f in fmt {
        let (text, pos) = match f {
            Frag::Lit { text, pos } => (text, *pos),
            Frag::Hole => {
                out.push(Frag::Hole);
                continue;
            }
        };
        let chars: Vec<char> = text.chars().collect();
        let mut lit = String::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i] != '%' {
                lit.push(chars[i]);
                i += 1;
                continue;
            }
            if chars.get(i + 1) == Some(&'%') {
                lit.push('%');
                i += 2;
                continue;
            }
            if !lit.is_empty() {
                out.push(Frag::Lit { text: std::mem::take(&mut lit), pos });
            }
            let mut j = i + 1;
            let mut key = None;
            if chars.get(j) == Some(&'(') {
                let close = match chars[j..].iter().position(|c| *c == ')') {
                    Some(k) => j + k,
                    None => return Value::Str(vec![Frag::Hole]),
                };
                key = Some(chars[j + 1..close].iter().collect::<String>());
                j = close + 1;
            }
            let conv = match chars.get(j) {
                Some(c) => *c,
                None => return Value::Str(vec![Frag::Hole]),
            };
            let arg = match (&key, &positional) {
                (Some(k), _) => args.get_key(k).cloned().unwrap_or(Value::Hole),
                (None, Some(list)) => {
                    let v = list.get(next).cloned().unwrap_or(Value::Hole);
                    next += 1;
                    v
                }
                (None, None) => Value::Hole,
            };
            let rendered = match conv {
                's' => to_str(&arg),
                'r' => to_repr(&arg),
                'd' | 'i' | 'u' => match &arg {
                    Value::Num { .. } => to_str(&arg),
                    _ => Value::Str(vec![Frag::Hole]),
                },
                _ => Value::Str(vec![Frag::Hole]),
            };
            out.extend(rendered.frags());
            i = j + 1;
        }
        if !lit.is_empty() {
            out.push(Frag::Lit { text: lit, pos });
        }
    }
    if let Some(list) = positional {
        if matches!(args, Value::Seq(_)) && next != list.len() {
            return Value::Str(vec![Frag::Hole]);
        }
    }
    Value::Str(out)
}

/// `str.format` with auto/explicit indices and keyword fields.
fn str_format(fmt: &[Frag], args: &[Value], kwargs: &[(String, Value)]) -> Value {
    let mut out: Vec<Frag> = Vec::new();
    let mut auto = 0usize;
    for f in fmt {
        let (text, pos) = match f {
            Frag::Lit { text, pos } => (text, *pos),
            Frag::Hole => {
                out.push(Frag::Hole);
                continue;
            }
        };
        let chars: Vec<char> = text.chars().collect();
        let mut lit = String::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if (c == '{' || c == '}') && chars.get(i + 1) == Some(&c) {
                lit.push(c);
                i += 2;
                continue;
            }
            if c == '}' {
                return Value::Str(vec![Frag::Hole]);
            }
            if c != '{' {
                lit.push(c);
                i += 1;
                continue;
            }
            let close = match chars[i..].iter().position(|c| *c == '}') {
                Some(k) => i + k,
                None => return Value::Str(vec![Frag::Hole]),
            };
            if !lit.is_empty() {
                out.push(Frag::Lit { text: std::mem::take(&mut lit), pos });
            }
            let field: String = chars[i + 1..close].iter().collect();
            let (name, rest) = match field.find(['!', ':']) {
                Some(k) => (&field[..k], &field[k..]),
                None => (field.as_str(), ""),
            };
            let arg = if name.is_empty() {
                let v = args.get(auto).cloned().unwrap_or(Value::Hole);
                auto += 1;
                v
            } else if let Ok(idx) = name.parse::<usize>() {
                args.get(idx).cloned().unwrap_or(Value::Hole)
            } else if name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                kwargs.iter().rev().find(|(k, _)| k == name).map(|(_, v)| v.clone()).unwrap_or(Value::Hole)
            } else {
                Value::Hole
            };
            let rendered = match rest {
                "" | "!s" | ":" => to_str(&arg),
                "!r" => to_repr(&arg),
                _ => Value::Str(vec![Frag::Hole]),
            };
            out.extend(rendered.frags());
            i = close + 1;
        }
        if !lit.is_empty() {
            out.push(Frag::Lit { text: lit, pos });
        }
    }
    Value::Str(out)
}

fn path_join(parts: &[Value]) -> Value {
    let mut out: Vec<Frag> = Vec::new();
    for p in parts {
        match p {
            Value::Str(frags) => {
                let text = p.text();
                if text.as_deref().is_some_and(|t| t.starts_with('/')) {
                    out.clear();
                } else if !out.is_empty() {
                    let ends_with_sep = matches!(out.last(), Some(Frag::Lit { text, .. }) if text.ends_with('/'));
                    if !ends_with_sep {
                        out.push(Frag::Lit { text: "/".into(), pos: None });
                    }
                }
                out.extend(frags.iter().cloned());
            }
            _ => return Value::Str(vec![Frag::Hole]),
        }
    }
    Value::Str(out)
}

fn const_key(v: &Value) -> Option<String> {
    match v {
        Value::Str(_) | Value::Num { .. } => v.text(),
        _ => None,
    }
}

fn set_dict_key(container: &mut Value, keys: &[String], v: Value) {
    let Value::Dict(items) = container else { return };
    let Some((first, rest)) = keys.split_first() else { return };
    if rest.is_empty() {
        if let Some(slot) = items.iter_mut().rev().find(|(k, _)| k == first) {
            slot.1 = v;
        } else {
            items.push((first.clone(), v));
        }
    } else if let Some(slot) = items.iter_mut().rev().find(|(k, _)| k == first) {
        set_dict_key(&mut slot.1, rest, v);
    }
}

impl<'a> Interp<'a> {
    fn drain_deferred(&mut self) {
        while let Some(d) = self.deferred.pop_front() {
            self.run_function(d.params, d.body, d.outer, d.self_value);
        }
    }

    fn run_function(&mut self, params: &'a [Param], body: &'a [Stmt], outer: Rc<Vec<Env>>, self_value: Option<Value>) {
        let outer = if outer.is_empty() { self.module_outer.clone() } else { outer };
        let mut f = Frame { env: Env::new(), outer, class_body: None };
        for (i, p) in params.iter().enumerate() {
            if let Some(d) = &p.default {
                self.eval(&mut f, d);
            }
            let v = match (&self_value, i) {
                (Some(s), 0) => s.clone(),
                _ => Value::Hole,
            };
            f.env.insert(p.name.clone(), Binding { value: v, defs: Vec::new() });
        }
        self.exec_block(&mut f, body);
    }

    fn add_def(&mut self, name: &str, pos: Pos, value: &Value) -> usize {
        let key = (name.to_string(), pos);
        if let Some(&i) = self.def_index.get(&key) {
            self.defs[i].value = value.clone();
            return i;
        }
        let i = self.defs.len();
        self.defs.push(Def { name: name.to_string(), pos, value: value.clone() });
        self.def_index.insert(key, i);
        i
    }

    fn bind(&mut self, f: &mut Frame, name: &str, pos: Pos, value: Value) {
        let d = self.add_def(name, pos, &value);
        if f.outer.is_empty() && f.class_body.is_none() {
            self.named_assigns.push((name.to_string(), value.clone(), pos));
        }
        f.env.insert(name.to_string(), Binding { value, defs: vec![d] });
    }

    fn lookup(&mut self, f: &Frame, name: &str, pos: Pos) -> Value {
        let found = f.env.get(name).or_else(|| f.outer.iter().rev().find_map(|e| e.get(name)));
        match found {
            Some(b) => {
                self.uses.insert((name.to_string(), pos), Use { name: name.to_string(), pos, defs: b.defs.clone() });
                b.value.clone()
            }
            None if BUILTINS.contains(&name) => Value::Module(name.to_string()),
            None if !self.star_imports.is_empty() => match self.star_imports.last() {
                Some(m) if self.star_imports.len() == 1 => Value::Module(format!("{m}.{name}")),
                _ => Value::Module(name.to_string()),
            },
            None => Value::Hole,
        }
    }

    fn exec_block(&mut self, f: &mut Frame, body: &'a [Stmt]) {
        for s in body {
            self.exec(f, s);
        }
    }

    fn exec(&mut self, f: &mut Frame, s: &'a Stmt) {
        match &s.kind {
            StmtKind::Expr(e) => {
                self.eval(f, e);
            }
            StmtKind::Assign { targets, value } => {
                let v = self.eval(f, value);
                for t in targets {
                    self.assign(f, t, v.clone());
                }
            }
            StmtKind::AnnAssign { target, value, .. } => {
                if let Some(value) = value {
                    let v = self.eval(f, value);
                    self.assign(f, target, v);
                }
            }
            StmtKind::AugAssign { target, op, value } => {
                let old = self.eval(f, target);
                let v = self.eval(f, value);
                let new = self.binop(&old, *op, &v);
                self.assign(f, target, new);
            }
            StmtKind::Import(aliases) => {
                for a in aliases {
                    self.imports.push(a.name.clone());
                    match &a.asname {
                        Some(asname) => self.bind(f, asname, s.pos, Value::Module(a.name.clone())),
                        None => {
                            let head = a.name.split('.').next().unwrap_or(&a.name).to_string();
                            self.bind(f, &head, s.pos, Value::Module(head.clone()));
                        }
                    }
                }
            }
            StmtKind::ImportFrom { module, level, names } => {
                let base = format!("{}{}", ".".repeat(*level as usize), module);
                if !base.is_empty() {
                    self.imports.push(base.clone());
                }
                for a in names {
                    if a.name == "*" {
                        if !base.is_empty() {
                            self.star_imports.push(base.clone());
                        }
                        continue;
                    }
                    let q = if base.is_empty() || base.ends_with('.') { format!("{base}{}", a.name) } else { format!("{base}.{}", a.name) };
                    let local = a.asname.clone().unwrap_or_else(|| a.name.clone());
                    self.bind(f, &local, s.pos, Value::Module(q));
                }
            }
            StmtKind::FunctionDef { name, params, body, decorators } => {
                for d in decorators {
                    self.eval(f, d);
                }
                if let Some(cname) = f.class_body.clone() {
                    let is_static = decorators.iter().any(|d| d.dotted_name().as_deref() == Some("staticmethod"));
                    let is_classmethod = decorators.iter().any(|d| d.dotted_name().as_deref() == Some("classmethod"));
                    let mut outer: Vec<Env> = (*f.outer).clone();
                    if outer.len() <= 1 {
                        outer.clear(); // module-level class: read the final module env later
                    }
                    let idx = self.methods.len();
                    self.methods.push((name.clone(), params, body, Rc::new(outer), decorators.clone()));
                    if let Some(st) = self.class_state.get_mut(&cname) {
                        st.methods.push((idx, is_static));
                        if is_classmethod {
                            // cls behaves like the class value
                            st.methods.pop();
                            let d = Deferred { params, body, outer: Rc::new(Vec::new()), self_value: Some(Value::Class(cname.clone())) };
                            self.deferred.push_back(d);
                        }
                    }
                    f.env.insert(name.clone(), Binding { value: Value::Function(name.clone()), defs: Vec::new() });
                } else {
                    // module-level functions see the final module environment
                    let outer = if f.outer.is_empty() {
                        Vec::new()
                    } else {
                        let mut o: Vec<Env> = (*f.outer).clone();
                        o.push(f.env.clone());
                        o
                    };
                    self.deferred.push_back(Deferred { params, body, outer: Rc::new(outer), self_value: None });
                    self.bind(f, name, s.pos, Value::Function(name.clone()));
                }
            }
            StmtKind::ClassDef { name, bases, keywords, body, decorators } => {
                for d in decorators {
                    self.eval(f, d);
                }
                let base_vals: Vec<Value> = bases.iter().map(|b| self.eval(f, b)).collect();
                for (_, v) in keywords {
                    self.eval(f, v);
                }
                let info_index = self.classes.len();
                self.classes.push(ClassInfo {
                    name: name.clone(),
                    pos: s.pos,
                    bases: Vec::new(),
                    attrs: Vec::new(),
                    meta: Vec::new(),
                    self_attrs: BTreeMap::new(),
                });
                // The nested Meta class reports into its owner.
                let is_meta = name == "Meta" && f.class_body.is_some();
                self.class_state.insert(name.clone(), ClassState { info_index, ..Default::default() });
                let mut outer: Vec<Env> = (*f.outer).clone();
                outer.push(f.env.clone());
                let mut cf = Frame { env: Env::new(), outer: Rc::new(outer), class_body: Some(name.clone()) };
                self.exec_block(&mut cf, body);
                let mut attrs = Vec::new();
                for st in body {
                    let (targets, pos): (Vec<&Expr>, Pos) = match &st.kind {
                        StmtKind::Assign { targets, .. } => (targets.iter().collect(), st.pos),
                        StmtKind::AnnAssign { target, value: Some(_), .. } => (vec![target], st.pos),
                        _ => continue,
                    };
                    for t in targets {
                        if let ExprKind::Name(n) = &t.kind {
                            let value = cf.env.get(n).map(|b| b.value.clone()).unwrap_or(Value::Hole);
                            attrs.push(ClassAttr { name: n.clone(), pos, value });
                        }
                    }
                }
                // Annotation-only declarations (`email: Mapped[str]`) still name columns.
                for st in body {
                    if let StmtKind::AnnAssign { target, value: None, annotation } = &st.kind {
                        if let ExprKind::Name(n) = &target.kind {
                            let ann = self.eval(&mut cf, annotation);
                            let _ = ann;
                            attrs.push(ClassAttr { name: n.clone(), pos: st.pos, value: Value::Hole });
                        }
                    }
                }
                attrs.sort_by_key(|a| a.pos);
                let class_attrs: BTreeMap<String, Value> = cf.env.iter().map(|(k, b)| (k.clone(), b.value.clone())).collect();
                let base_descs: Vec<String> = {
                    let tmp = self.snapshot_graph_calls();
                    base_vals.iter().map(|v| v.describe(&tmp)).collect()
                };
                self.classes[info_index].bases = base_descs;
                self.classes[info_index].attrs = attrs.clone();
                for (k, v) in &class_attrs {
                    if !matches!(v, Value::Function(_)) {
                        self.named_assigns.push((k.clone(), v.clone(), self.classes[info_index].pos));
                    }
                }
                if let Some(stc) = self.class_state.get_mut(name) {
                    stc.class_attrs = class_attrs.clone();
                }
                if is_meta {
                    if let Some(owner) = f.class_body.clone() {
                        if let Some(ost) = self.class_state.get(&owner) {
                            let oi = ost.info_index;
                            self.classes[oi].meta = attrs.iter().map(|a| (a.name.clone(), a.value.clone())).collect();
                        }
                    }
                }
                if f.class_body.is_some() {
                    f.env.insert(name.clone(), Binding { value: Value::Class(name.clone()), defs: Vec::new() });
                } else {
                    self.bind(f, name, s.pos, Value::Class(name.clone()));
                }
            }
            StmtKind::If { test, body, orelse } => {
                self.eval(f, test);
                let pre = f.env.clone();
                self.exec_block(f, body);
                let then_env = std::mem::replace(&mut f.env, pre);
                self.exec_block(f, orelse);
                f.env = join_env(&then_env, &f.env);
            }
            StmtKind::For { target, iter, body, orelse } => {
                self.eval(f, iter);
                self.run_loop(f, Some(target), None, body, orelse);
            }
            StmtKind::While { test, body, orelse } => {
                self.run_loop(f, None, Some(test), body, orelse);
            }
            StmtKind::Try { body, handlers, orelse, finalbody } => {
                let pre = f.env.clone();
                self.exec_block(f, body);
                let after_body = f.env.clone();
                let handler_start = join_env(&pre, &after_body);
                self.exec_block(f, orelse);
                let mut result = f.env.clone();
                for h in handlers {
                    f.env = handler_start.clone();
                    if let Some(n) = &h.name {
                        f.env.insert(n.clone(), Binding { value: Value::Hole, defs: Vec::new() });
                    }
                    self.exec_block(f, &h.body);
                    result = join_env(&result, &f.env);
                }
                f.env = result;
                self.exec_block(f, finalbody);
            }
            StmtKind::With { items, body } => {
                for item in items {
                    let v = self.eval(f, &item.context);
                    if let Some(t) = &item.target {
                        self.assign(f, t, v);
                    }
                }
                self.exec_block(f, body);
            }
            StmtKind::Return(e) | StmtKind::Raise(e) => {
                if let Some(e) = e {
                    self.eval(f, e);
                }
            }
            StmtKind::Delete(targets) => {
                for t in targets {
                    if let ExprKind::Name(n) = &t.kind {
                        f.env.remove(n);
                    } else {
                        self.eval(f, t);
                    }
                }
            }
            StmtKind::Assert(t, m) => {
                self.eval(f, t);
                if let Some(m) = m {
                    self.eval(f, m);
                }
            }
            StmtKind::Global(_) | StmtKind::Pass | StmtKind::Break | StmtKind::Continue => {}
        }
    }

    fn run_loop(&mut self, f: &mut Frame, target: Option<&Expr>, test: Option<&Expr>, body: &'a [Stmt], orelse: &'a [Stmt]) {
        let pre = f.env.clone();
        for _ in 0..2 {
            if let Some(t) = test {
                self.eval(f, t);
            }
            if let Some(t) = target {
                self.assign(f, t, Value::Hole);
            }
            self.exec_block(f, body);
            f.env = join_env(&pre, &f.env);
        }
        self.exec_block(f, orelse);
        f.env = join_env(&pre, &f.env);
    }

    fn snapshot_graph_calls(&self) -> DefUseGraph {
        DefUseGraph { calls: self.calls.values().cloned().collect(), ..Default::default() }
    }

    fn assign(&mut self, f: &mut Frame, target: &Expr, v: Value) {
        match &target.kind {
            ExprKind::Name(n) => self.bind(f, n, target.pos, v),
            ExprKind::Tuple(elts) | ExprKind::List(elts) => {
                let items = match &v {
                    Value::Seq(items) if items.len() == elts.len() && !elts.iter().any(|e| matches!(e.kind, ExprKind::Starred(_))) => Some(items.clone()),
                    _ => None,
                };
                for (i, e) in elts.iter().enumerate() {
                    let item = items.as_ref().map(|it| it[i].clone()).unwrap_or(Value::Hole);
                    self.assign(f, e, item);
                }
            }
            ExprKind::Starred(inner) => self.assign(f, inner, Value::Hole),
            ExprKind::Attribute { value, attr } => {
                let recv = self.eval(f, value);
                if let Value::Instance(c) = recv {
                    if let Some(st) = self.class_state.get_mut(&c) {
                        let joined = match st.self_write.get(attr) {
                            Some(old) => join_value(old, &v),
                            None => v,
                        };
                        st.self_write.insert(attr.clone(), joined);
                    }
                }
            }
            ExprKind::Subscript { value, index } => {
                let key_val = self.eval(f, index);
                let key = const_key(&key_val);
                if let Some(k) = &key {
                    self.keyed_assigns.insert((target.pos, k.clone()), KeyedAssign { key: k.clone(), value: v.clone(), pos: target.pos });
                }
                // d["a"]["b"] = v on a name bound to a dict literal
                let mut keys = vec![];
                let mut base = value.as_ref();
                if let Some(k) = key {
                    keys.push(k);
                } else {
                    self.eval(f, value);
                    if let ExprKind::Name(n) = &value.kind {
                        if let Some(b) = f.env.get_mut(n) {
                            if matches!(b.value, Value::Dict(_)) {
                                b.value = Value::Hole;
                            }
                        }
                    }
                    return;
                }
                loop {
                    match &base.kind {
                        ExprKind::Subscript { value: inner, index: idx } => {
                            let kv = self.eval(f, idx);
                            match const_key(&kv) {
                                Some(k) => keys.push(k),
                                None => return,
                            }
                            base = inner;
                        }
                        ExprKind::Name(n) => {
                            keys.reverse();
                            let pos = base.pos;
                            let n = n.clone();
                            let current = self.lookup(f, &n, pos);
                            if let Value::Dict(_) = current {
                                let mut updated = current;
                                set_dict_key(&mut updated, &keys, v);
                                self.bind(f, &n, target.pos, updated);
                            }
                            return;
                        }
                        _ => {
                            self.eval(f, base);
                            return;
                        }
                    }
                }
            }
            _ => {
                self.eval(f, target);
            }
        }
    }

    fn binop(&mut self, a: &Value, op: BinOp, b: &Value) -> Value {
        match op {
            BinOp::Add => concat(a, b),
            BinOp::Mod => match a {
                Value::Str(frags) => percent_format(frags, b),
                _ => Value::Hole,
            },
            BinOp::Mul => match (a, b) {
                (Value::Num { text: x, .. }, Value::Num { text: y, .. }) => match (x.parse::<i64>(), y.parse::<i64>()) {
                    (Ok(p), Ok(q)) => p.checked_mul(q).map(|s| Value::Num { text: s.to_string(), pos: None }).unwrap_or(Value::Hole),
                    _ => Value::Hole,
                },
                _ => Value::Hole,
            },
            _ => Value::Hole,
        }
    }

    fn eval(&mut self, f: &mut Frame, e: &Expr) -> Value {
        match &e.kind {
            ExprKind::Name(n) => self.lookup(f, n, e.pos),
            ExprKind::Str(parts) => self.eval_str(f, parts),
            ExprKind::Bytes(_) => Value::Hole,
            ExprKind::Num(text) => match canonical_int(text) {
                Some(t) => Value::Num { text: t, pos: Some(e.pos) },
                None => Value::Hole,
            },
            ExprKind::True => Value::Bool(true),
            ExprKind::False => Value::Bool(false),
            ExprKind::None => Value::NoneVal,
            ExprKind::Ellipsis => Value::Hole,
            ExprKind::Attribute { value, attr } => {
                let recv = self.eval(f, value);
                self.attribute(&recv, attr)
            }
            ExprKind::Subscript { value, index } => {
                let recv = self.eval(f, value);
                let idx = self.eval(f, index);
                match (&recv, const_key(&idx)) {
                    (Value::Dict(_), Some(k)) => recv.get_key(&k).cloned().unwrap_or(Value::Hole),
                    (Value::Seq(items), Some(k)) => {
                        let i: i64 = k.parse().unwrap_or(i64::MAX);
                        let len = items.len() as i64;
                        let i = if i < 0 { i + len } else { i };
                        if (0..len).contains(&i) {
                            items[i as usize].clone()
                        } else {
                            Value::Hole
                        }
                    }
                    (Value::Object { root, path }, Some(k)) => {
                        let mut p = path.clone();
                        p.push(Step::Key(k));
                        Value::Object { root: *root, path: p }
                    }
                    _ => Value::Hole,
                }
            }
            ExprKind::Slice { lower, upper, step } => {
                for x in [lower, upper, step].into_iter().flatten() {
                    self.eval(f, x);
                }
                Value::Hole
            }
            ExprKind::Call { func, args } => self.eval_call(f, e.pos, func, args),
            ExprKind::BinOp { left, op, right } => {
                let a = self.eval(f, left);
                let b = self.eval(f, right);
                self.binop(&a, *op, &b)
            }
            ExprKind::UnaryOp { op, operand } => {
                let v = self.eval(f, operand);
                match (op, &v) {
                    (UnaryOp::Neg, Value::Num { text, pos }) if !text.starts_with('-') && text != "0" => Value::Num { text: format!("-{text}"), pos: *pos },
                    (UnaryOp::Pos, Value::Num { .. }) => v,
                    _ => Value::Hole,
                }
            }
            ExprKind::BoolOp { and, values } => {
                let vals: Vec<Value> = values.iter().map(|v| self.eval(f, v)).collect();
                if *and {
                    return Value::Hole;
                }
                // `a or b`: the first value whose truthiness is known to be true
                for v in &vals {
                    match v {
                        Value::Str(_) => match v.text() {
                            Some(t) if !t.is_empty() => return v.clone(),
                            Some(_) => continue,
                            None => {
                                // non-empty literal piece makes it truthy
                                if v.frags().iter().any(|fr| matches!(fr, Frag::Lit { text, .. } if !text.is_empty())) {
                                    return v.clone();
                                }
                                return Value::Hole;
                            }
                        },
                        Value::Num { text, .. } if text != "0" => return v.clone(),
                        Value::Num { .. } | Value::NoneVal | Value::Bool(false) => continue,
                        Value::Bool(true) => return v.clone(),
                        Value::Dict(d) if d.is_empty() => continue,
                        Value::Seq(s) if s.is_empty() => continue,
                        Value::Dict(_) | Value::Seq(_) => return v.clone(),
                        _ => return Value::Hole,
                    }
                }
                vals.last().cloned().unwrap_or(Value::Hole)
            }
            ExprKind::Compare { left, rest } => {
                self.eval(f, left);
                for r in rest {
                    self.eval(f, r);
                }
                Value::Hole
            }
            ExprKind::IfExp { test, body, orelse } => {
                self.eval(f, test);
                let a = self.eval(f, body);
                let b = self.eval(f, orelse);
                join_value(&a, &b)
            }
            ExprKind::Lambda { .. } | ExprKind::Comprehension { .. } => Value::Hole,
            ExprKind::Tuple(elts) | ExprKind::List(elts) | ExprKind::Set(elts) => {
                let mut items = Vec::new();
                let mut opaque = false;
                for x in elts {
                    match &x.kind {
                        ExprKind::Starred(inner) => match self.eval(f, inner) {
                            Value::Seq(s) => items.extend(s),
                            _ => opaque = true,
                        },
                        _ => items.push(self.eval(f, x)),
                    }
                }
                if opaque || matches!(e.kind, ExprKind::Set(_)) {
                    Value::Hole
                } else {
                    Value::Seq(items)
                }
            }
            ExprKind::Dict(items) => {
                let mut out: Vec<(String, Value)> = Vec::new();
                for (k, v) in items {
                    match k {
                        Some(k) => {
                            let kv = self.eval(f, k);
                            let vv = self.eval(f, v);
                            if let Some(key) = const_key(&kv) {
                                out.retain(|(x, _)| *x != key);
                                out.push((key, vv));
                            }
                        }
                        None => {
                            if let Value::Dict(spread) = self.eval(f, v) {
                                for (key, vv) in spread {
                                    out.retain(|(x, _)| *x != key);
                                    out.push((key, vv));
                                }
                            }
                        }
                    }
                }
                Value::Dict(out)
            }
            ExprKind::Starred(inner) | ExprKind::Await(inner) => self.eval(f, inner),
            ExprKind::Yield(inner) => {
                if let Some(i) = inner {
                    self.eval(f, i);
                }
                Value::Hole
            }
            ExprKind::NamedExpr { target, value } => {
                let v = self.eval(f, value);
                self.bind(f, target, e.pos, v.clone());
                v
            }
        }
    }

    fn eval_str(&mut self, f: &mut Frame, parts: &[StrPart]) -> Value {
        let mut out = Vec::new();
        for p in parts {
            match p {
                StrPart::Lit { text, pos } => out.push(Frag::Lit { text: text.clone(), pos: Some(*pos) }),
                StrPart::Interp { expr, conversion, spec } => {
                    let v = self.eval(f, expr);
                    let spec_empty = match spec {
                        None => true,
                        Some(s) => s.iter().all(|x| matches!(x, StrPart::Lit { text, .. } if text.is_empty())),
                    };
                    if let Some(s) = spec {
                        self.eval_str(f, s);
                    }
                    let rendered = match (conversion, spec_empty) {
                        (None | Some('s'), true) => to_str(&v),
                        (Some('r'), true) => to_repr(&v),
                        _ => Value::Str(vec![Frag::Hole]),
                    };
                    out.extend(rendered.frags());
                }
            }
        }
        Value::Str(out)
    }

    fn attribute(&mut self, recv: &Value, attr: &str) -> Value {
        match recv {
            Value::Module(q) => Value::Module(format!("{q}.{attr}")),
            Value::Object { root, path } => {
                let mut p = path.clone();
                p.push(Step::Attr(attr.to_string()));
                Value::Object { root: *root, path: p }
            }
            Value::Class(c) => self.class_state.get(c).and_then(|st| st.class_attrs.get(attr).cloned()).unwrap_or(Value::Hole),
            Value::Instance(c) => match self.class_state.get(c) {
                Some(st) => st.self_read.get(attr).or_else(|| st.class_attrs.get(attr)).cloned().unwrap_or(Value::Hole),
                None => Value::Hole,
            },
            _ => Value::Hole,
        }
    }

    fn eval_call(&mut self, f: &mut Frame, pos: Pos, func: &Expr, args: &[Arg]) -> Value {
        let (callee, func_val) = match &func.kind {
            ExprKind::Attribute { value, attr } => {
                let recv = self.eval(f, value);
                match &recv {
                    Value::Module(q) => (Callee::Qualified(format!("{q}.{attr}")), Value::Module(format!("{q}.{attr}"))),
                    _ => {
                        let fv = self.attribute(&recv, attr);
                        (Callee::Method { receiver: recv, name: attr.clone() }, fv)
                    }
                }
            }
            _ => {
                let fv = self.eval(f, func);
                match &fv {
                    Value::Module(q) => (Callee::Qualified(q.clone()), fv.clone()),
                    _ => (Callee::Unknown, fv.clone()),
                }
            }
        };
        let mut pargs = Vec::new();
        let mut kwargs = Vec::new();
        for a in args {
            match a {
                Arg::Positional(x) => pargs.push(self.eval(f, x)),
                Arg::Starred(x) => match self.eval(f, x) {
                    Value::Seq(items) => pargs.extend(items),
                    _ => pargs.push(Value::Hole),
                },
                Arg::Keyword(k, x) => {
                    let v = self.eval(f, x);
                    kwargs.push((k.clone(), v));
                }
                Arg::DoubleStar(x) => {
                    if let Value::Dict(items) = self.eval(f, x) {
                        kwargs.extend(items);
                    }
                }
            }
        }
        let site = CallSite { pos, callee: callee.clone(), args: pargs.clone(), kwargs: kwargs.clone() };
        self.calls.insert(pos, site);

        // Folding of well-known pure functions.
        match &callee {
            Callee::Qualified(q) => {
                match q.as_str() {
                    "os.getenv" | "os.environ.get" | "os.environ.setdefault" | "os.environ.pop" | "input" | "getpass.getpass" => return Value::Hole,
                    "os.path.join" | "posixpath.join" => return path_join(&pargs),
                    "str" => {
                        return match pargs.as_slice() {
                            [] => Value::lit("", None),
                            [v] => to_str(v),
                            _ => Value::Hole,
                        }
                    }
                    "repr" => return pargs.first().map(to_repr).unwrap_or(Value::Hole),
                    "int" => {
                        return match pargs.as_slice() {
                            [v @ Value::Num { .. }] => v.clone(),
                            [v @ Value::Str(_)] => match v.text().and_then(|t| t.trim().parse::<i64>().ok()) {
                                Some(n) => Value::Num { text: n.to_string(), pos: v.first_pos() },
                                None => Value::Hole,
                            },
                            _ => Value::Hole,
                        }
                    }
                    "dict" => {
                        let mut out = match pargs.first() {
                            Some(Value::Dict(d)) => d.clone(),
                            Some(_) => return Value::Hole,
                            None => Vec::new(),
                        };
                        for (k, v) in kwargs {
                            out.retain(|(x, _)| *x != k);
                            out.push((k, v));
                        }
                        return Value::Dict(out);
                    }
                    "tuple" | "list" => {
                        return match pargs.first() {
                            Some(v @ Value::Seq(_)) => v.clone(),
                            _ => Value::Hole,
                        }
                    }
                    _ => {}
                }
                match &func_val {
                    Value::Class(c) => Value::Instance(c.clone()),
                    Value::Function(_) => Value::Hole,
                    _ => Value::Object { root: pos, path: Vec::new() },
                }
            }
            Callee::Method { receiver, name } => match (receiver, name.as_str()) {
                (Value::Str(frags), "format") => str_format(frags, &pargs, &kwargs),
                (Value::Str(_), "join") => match pargs.first() {
                    Some(Value::Seq(items)) => {
                        let mut out: Vec<Frag> = Vec::new();
                        for (i, it) in items.iter().enumerate() {
                            if i > 0 {
                                out.extend(receiver.frags());
                            }
                            match it {
                                Value::Str(fr) => out.extend(fr.iter().cloned()),
                                _ => out.push(Frag::Hole),
                            }
                        }
                        Value::Str(out)
                    }
                    _ => Value::Str(vec![Frag::Hole]),
                },
                (Value::Str(_), "strip" | "lower" | "upper") if pargs.is_empty() => match receiver.text() {
                    Some(t) => {
                        let r = match name.as_str() {
                            "strip" => t.trim().to_string(),
                            "lower" => t.to_lowercase(),
                            _ => t.to_uppercase(),
                        };
                        Value::lit(r, receiver.first_pos())
                    }
                    None => Value::Str(vec![Frag::Hole]),
                },
                (Value::Dict(_), "get") => {
                    let key = pargs.first().and_then(const_key);
                    match key.and_then(|k| receiver.get_key(&k).cloned()) {
                        Some(v) => v,
                        None => Value::Hole,
                    }
                }
                (Value::Dict(_), "copy") => receiver.clone(),
                (Value::Object { root, path }, _) => {
                    let mut p = path.clone();
                    p.push(Step::Call { name: name.clone(), site: pos });
                    Value::Object { root: *root, path: p }
                }
                (Value::Class(c), _) if matches!(func_val, Value::Class(_)) => Value::Instance(c.clone()),
                _ => Value::Hole,
            },
            Callee::Unknown => match func_val {
                Value::Class(c) => Value::Instance(c),
                _ => Value::Hole,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pysyntax::parse_module;

    fn global(src: &str, name: &str) -> Value {
        let g = build_def_use(&parse_module(src));
        g.globals.get(name).cloned().unwrap_or(Value::Hole)
    }

    fn text(src: &str, name: &str) -> Option<String> {
        global(src, name).text()
    }

    #[test]
    fn folds_concatenation() {
        assert_eq!(text("pwd = 'a' + 'b'", "pwd").as_deref(), Some("ab"));
        assert_eq!(text("a='x'\na += 'y'\na += 'z'", "a").as_deref(), Some("xyz"));
    }

    #[test]
    fn env_reads_are_holes() {
        assert_eq!(global("import os\nh = os.environ['H']", "h"), Value::Hole);
        assert!(text("import os\nh = os.getenv('H', 'x')", "h").is_none());
        assert!(text("from os import environ\nh = environ.get('H')", "h").is_none());
    }

    #[test]
    fn folds_fstring_and_format() {
        let src = "user='u'\npw='p'\nh='h.io'\ndb='d'\nurl = f\"mysql://{user}:{pw}@{h}/{db}\"\n";
        assert_eq!(text(src, "url").as_deref(), Some("mysql://u:p@h.io/d"));
        assert_eq!(text("x = '{}:{p}'.format('a', p=3306)", "x").as_deref(), Some("a:3306"));
        assert_eq!(text("x = '%s@%s' % ('u', 'h')", "x").as_deref(), Some("u@h"));
        assert_eq!(text("x = '%(a)s-%(b)d' % {'a': 'q', 'b': 2}", "x").as_deref(), Some("q-2"));
    }

    #[test]
    fn branches_join_to_hole() {
        assert!(text("if c:\n    h = 'a'\nelse:\n    h = 'b'\n", "h").is_none());
        assert_eq!(text("if c:\n    h = 'a'\nelse:\n    h = 'a'\n", "h").as_deref(), Some("a"));
        assert!(text("h = 'a'\nfor x in y:\n    h = h + 'b'\n", "h").is_none());
    }

    #[test]
    fn dict_item_assignment_and_spread() {
        let src = "c = {'host': 'h'}\nc['password'] = 'p'\nd = dict(**c, port=1)\n";
        let d = global(src, "d");
        assert_eq!(d.get_key("password").and_then(|v| v.text()).as_deref(), Some("p"));
        assert_eq!(d.get_key("port").and_then(|v| v.text()).as_deref(), Some("1"));
    }

    #[test]
    fn aliased_imports_resolve_callees() {
        let g = build_def_use(&parse_module("import pymysql as m\nconn = m.connect(host='h')\ncur = conn.cursor()\ncur.execute('SELECT 1')\n"));
        assert!(matches!(&g.calls[0].callee, Callee::Qualified(q) if q == "pymysql.connect"));
        let exec = g.calls.iter().find(|c| c.short_name() == Some("execute")).unwrap();
        match &exec.callee {
            Callee::Method { receiver: Value::Object { root, .. }, .. } => assert_eq!(*root, g.calls[0].pos),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn self_attributes_flow_between_methods() {
        let src = "import pymysql\nclass D:\n    def __init__(self):\n        self.h = 'db.io'\n    def go(self):\n        return pymysql.connect(host=self.h)\n";
        let g = build_def_use(&parse_module(src));
        let c = g.calls.iter().find(|c| c.short_name() == Some("connect")).unwrap();
        assert_eq!(c.kwarg("host").and_then(|v| v.text()).as_deref(), Some("db.io"));
    }

    #[test]
    fn function_params_and_returns_are_holes() {
        let src = "def f(a):\n    return a\nx = f('z')\n";
        assert_eq!(global(src, "x"), Value::Hole);
    }

    #[test]
    fn def_use_edges_link_names() {
        let g = build_def_use(&parse_module("a = 'x'\nb = a + 'y'\n"));
        let edges = g.edges();
        assert_eq!(edges.len(), 1);
        let (d, u) = edges[0];
        assert_eq!(g.defs[d].name, "a");
        assert_eq!(g.uses[u].name, "a");
        assert_eq!(g.literal(d).as_deref(), Some("x"));
    }

    #[test]
    fn fragments_keep_positions() {
        let v = global("q = 'SELECT a '\nq += 'FROM t'\n", "q");
        let Value::Str(frags) = v else { panic!() };
        let positions: Vec<_> = frags.iter().map(|f| match f { Frag::Lit { pos, .. } => pos.unwrap(), Frag::Hole => panic!() }).collect();
        assert_eq!(positions, vec![Pos::new(1, 6), Pos::new(2, 7)]);
    }

    #[test]
    fn try_import_fallback_keeps_module() {
        let src = "try:\n    import pymysql\nexcept ImportError:\n    pymysql = None\n";
        assert_eq!(global(src, "pymysql"), Value::Module("pymysql".into()));
    }

    #[test]
    fn or_default_uses_known_truthiness() {
        assert!(text("import os\nh = os.getenv('H') or 'x'", "h").is_none());
        assert_eq!(text("h = '' or 'x'", "h").as_deref(), Some("x"));
    }
}

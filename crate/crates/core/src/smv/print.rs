use std::fmt::Write as _;

use super::{Comment, Define, Literal, SmvExpr, SmvModule, SmvType, Trans};

fn precedence(e: &SmvExpr) -> u8 {
    match e {
        SmvExpr::Imp(..) => 1,
        SmvExpr::Iff(..) => 2,
        SmvExpr::Or(_) => 3,
        SmvExpr::And(_) => 4,
        SmvExpr::Cmp(..) => 5,
        SmvExpr::Arith(..) => 6,
        SmvExpr::Not(_) => 7,
        _ => 8,
    }
}

fn operand(out: &mut String, e: &SmvExpr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &SmvExpr) {
    let p = precedence(e);
    match e {
        SmvExpr::Int(i) => {
            let _ = write!(out, "{i}");
        }
        SmvExpr::Sym(s) | SmvExpr::Ref(s) => out.push_str(s),
        SmvExpr::Not(inner) => {
            out.push('!');
            operand(out, inner, precedence(inner) < p);
        }
        SmvExpr::Next(inner) => {
            out.push_str("next(");
            write_expr(out, inner);
            out.push(')');
        }
        SmvExpr::And(parts) | SmvExpr::Or(parts) => {
            let sep = if matches!(e, SmvExpr::And(_)) { " & " } else { " | " };
            for (i, part) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                // comparisons are bracketed inside connectives for readability
                let parens = precedence(part) <= p || matches!(part, SmvExpr::Cmp(..));
                operand(out, part, parens);
            }
        }
        SmvExpr::Imp(a, b) => {
            // right associative
            operand(out, a, precedence(a) <= p);
            out.push_str(" -> ");
            operand(out, b, precedence(b) < p);
        }
        SmvExpr::Iff(a, b) => {
            operand(out, a, precedence(a) < p);
            out.push_str(" <-> ");
            operand(out, b, precedence(b) <= p);
        }
        SmvExpr::Cmp(op, a, b) => {
            operand(out, a, precedence(a) <= p);
            let _ = write!(out, " {} ", op.symbol());
            operand(out, b, precedence(b) <= p);
        }
        SmvExpr::Arith(op, a, b) => {
            operand(out, a, precedence(a) < p);
            let _ = write!(out, " {} ", op.symbol());
            operand(out, b, precedence(b) <= p);
        }
    }
}

/// Single-line rendering of an expression with minimal brackets.
pub fn print_expr(e: &SmvExpr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn comments_at(comments: &[Comment], at: usize) -> impl Iterator<Item = &Comment> {
    comments.iter().filter(move |c| c.before == at)
}

fn trailing_comments(comments: &[Comment], len: usize) -> impl Iterator<Item = &Comment> {
    comments.iter().filter(move |c| c.before >= len)
}

fn print_type(ty: &SmvType) -> String {
    match ty {
        SmvType::Boolean => "boolean".into(),
        SmvType::Enum(lits) => {
            let items: Vec<String> = lits.iter().map(Literal::to_string).collect();
            format!("{{{}}}", items.join(", "))
        }
    }
}

fn print_vars(out: &mut String, m: &SmvModule) {
    out.push_str("VAR\n");
    // a blank line separates comment groups
    fn comment(out: &mut String, c: &Comment, started: bool) {
        if started {
            out.push('\n');
        }
        let _ = writeln!(out, "  -- {}", c.text);
    }
    let mut started = false;
    for (i, v) in m.vars.iter().enumerate() {
        for c in comments_at(&m.var_comments, i) {
            comment(out, c, started);
            started = true;
        }
        let _ = writeln!(out, "  {} : {};", v.name, print_type(&v.ty));
        started = true;
    }
    for c in trailing_comments(&m.var_comments, m.vars.len()) {
        comment(out, c, started);
        started = true;
    }
}

/// Prints a conjunct list one item per line, interleaving comments.
fn print_conjunct_lines(out: &mut String, parts: &[SmvExpr], comments: &[Comment], indent: &str, first_inline: bool) {
    for (i, part) in parts.iter().enumerate() {
        if !(first_inline && i == 0) {
            for c in comments_at(comments, i) {
                let _ = writeln!(out, "{indent}-- {}", c.text);
            }
            out.push_str(indent);
        }
        write_expr(out, part);
        out.push_str(if i + 1 == parts.len() { ";\n" } else { " &\n" });
    }
}

fn print_inits(out: &mut String, m: &SmvModule) {
    out.push_str("INIT\n");
    if m.inits.is_empty() {
        out.push_str("  1;\n");
        return;
    }
    print_conjunct_lines(out, &m.inits, &m.init_comments, "  ", false);
}

fn print_define(out: &mut String, d: &Define) {
    let parts = d.expr.conjuncts();
    for c in comments_at(&d.comments, 0) {
        let _ = writeln!(out, "  -- {}", c.text);
    }
    let _ = write!(out, "  {} := ", d.name);
    if d.comments.is_empty() || parts.len() == 1 {
        write_expr(out, &d.expr);
        out.push_str(";\n");
    } else {
        print_conjunct_lines(out, parts, &d.comments, "    ", true);
    }
}

fn print_defines(out: &mut String, m: &SmvModule) {
    for (i, d) in m.defines.iter().enumerate() {
        let new_block = i == 0 || d.name.ends_with("_enabled");
        if new_block {
            if i > 0 {
                out.push('\n');
            }
            for c in comments_at(&m.define_comments, i) {
                let _ = writeln!(out, "-- {}", c.text);
            }
            out.push_str("DEFINE\n");
        }
        print_define(out, d);
    }
}

/// A conjunct of a TRANS block: disjunctions are broken over several lines.
fn print_trans_part(out: &mut String, e: &SmvExpr, terminator: &str) {
    match e {
        SmvExpr::Or(parts) => {
            for (i, p) in parts.iter().enumerate() {
                out.push_str(if i == 0 { "  ( " } else { "      " });
                operand(out, p, precedence(p) <= 5);
                out.push_str(if i + 1 == parts.len() { " )" } else { " |\n" });
            }
        }
        SmvExpr::Int(_) | SmvExpr::Sym(_) | SmvExpr::Ref(_) => {
            out.push_str("  ");
            write_expr(out, e);
        }
        _ => {
            out.push_str("  ( ");
            write_expr(out, e);
            out.push_str(" )");
        }
    }
    out.push_str(terminator);
}

fn print_trans(out: &mut String, t: &Trans) {
    out.push_str("TRANS\n");
    let parts = t.expr.conjuncts();
    if parts.len() == 1 {
        for c in &t.comments {
            let _ = writeln!(out, "  -- {}", c.text);
        }
        match &t.expr {
            SmvExpr::Or(_) => print_trans_part(out, &t.expr, ";\n"),
            e => {
                out.push_str("  ");
                write_expr(out, e);
                out.push_str(";\n");
            }
        }
        return;
    }
    for (i, p) in parts.iter().enumerate() {
        for c in comments_at(&t.comments, i) {
            let _ = writeln!(out, "  -- {}", c.text);
        }
        print_trans_part(out, p, if i + 1 == parts.len() { ";\n" } else { " &\n" });
    }
}

/// Renders a module in the listing layout: `VAR`, `INIT`, one `DEFINE`
/// block per `_enabled`/`_taken` pair, then each `TRANS` block.
pub fn print_smv(m: &SmvModule) -> String {
    let mut out = String::new();
    print_vars(&mut out, m);
    out.push('\n');
    print_inits(&mut out, m);
    if !m.defines.is_empty() {
        out.push('\n');
        print_defines(&mut out, m);
    }
    for t in &m.trans {
        out.push('\n');
        print_trans(&mut out, t);
    }
    out
}

//! One function per subcommand; each returns a table for the caller to write.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use num_complex::Complex64;

use tfreg_core::interacting::{envelope_at, mu_sweep, DEFAULT_EPS};
use tfreg_core::spacetime::classify;
use tfreg_core::{
    Error, FieldLabel, FnId, FockSpec, FreeField, GramTable, Interaction, ModeLabel, OperatorPoly, Registry, TestFunction, Wick,
};

use crate::config::{lookup, parse_field_label, RunConfig};
use crate::error::{config_err, CliResult};
use crate::table::{Provenance, ResultTable};

/// Result of one command: the table plus human-readable lines to print
/// before the summary line.
pub struct Outcome {
    pub table: ResultTable,
    pub messages: Vec<String>,
    /// Set when the command ran but a check it performs failed.
    pub failed: bool,
}

impl Outcome {
    fn ok(table: ResultTable) -> Self {
        Outcome { table, messages: Vec::new(), failed: false }
    }
}

fn provenance(cmd: &str, cfg: &RunConfig) -> Provenance {
    Provenance::new(cmd, cfg.sha256(), cfg.seed)
}

fn fmt_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";")
}

fn mode_name(reg: &Registry, m: ModeLabel) -> CliResult<String> {
    let n = reg.name(m.id)?;
    Ok(if m.conj { format!("{n}*") } else { n.to_string() })
}

/// `a+(f) a+(g*) a(h)`; the identity monomial prints as `1`.
fn monomial_name(reg: &Registry, creators: &[ModeLabel], annihilators: &[ModeLabel]) -> CliResult<String> {
    let mut parts = Vec::new();
    for c in creators {
        parts.push(format!("a+({})", mode_name(reg, *c)?));
    }
    for a in annihilators {
        parts.push(format!("a({})", mode_name(reg, *a)?));
    }
    Ok(if parts.is_empty() { "1".into() } else { parts.join(" ") })
}

fn separation_name(a: &TestFunction, b: &TestFunction) -> String {
    let s = classify(&a.effective_support(DEFAULT_EPS), &b.effective_support(DEFAULT_EPS));
    format!("{s:?}").to_lowercase()
}

fn require_functions(reg: &Registry, n: usize) -> CliResult<()> {
    if reg.len() < n {
        return Err(config_err(format!("this command needs at least {n} registered functions, found {}", reg.len())));
    }
    Ok(())
}

/// Pairwise `(f_i, f_j)` for `i <= j`, with both evaluation paths.
pub fn inner(cfg: &RunConfig) -> CliResult<Outcome> {
    let reg = cfg.registry()?;
    require_functions(&reg, 2)?;
    let field = cfg.field()?;
    let mut t = ResultTable::new(
        &["f", "g", "re", "im", "lattice_re", "lattice_im", "closed_re", "closed_im", "rel_diff"],
        provenance("inner", cfg),
    );
    let ids: Vec<FnId> = reg.ids().collect();
    let norms: Vec<f64> =
        ids.iter().map(|&i| Ok(field.pair_with(reg.get(i)?, reg.get(i)?, cfg.method)?.re)).collect::<CliResult<_>>()?;
    for (a, &i) in ids.iter().enumerate() {
        for (b, &j) in ids.iter().enumerate().skip(a) {
            let (fi, fj) = (reg.get(i)?, reg.get(j)?);
            let v = field.pair_with(fi, fj, cfg.method)?;
            let lat = field.inner_product(fi, fj)?;
            let closed = if fi.is_gaussian() && fj.is_gaussian() { Some(field.inner_product_closed(fi, fj)?) } else { None };
            let rel = closed.map(|c| (c - lat).norm() / (norms[a] * norms[b]).sqrt());
            t.push(vec![
                reg.name(i)?.into(),
                reg.name(j)?.into(),
                v.re.into(),
                v.im.into(),
                lat.re.into(),
                lat.im.into(),
                closed.map(|c| c.re).into(),
                closed.map(|c| c.im).into(),
                rel.into(),
            ]);
        }
    }
    Ok(Outcome::ok(t))
}

/// `[phi_f, phi_g]` for every unordered pair, with the causal relation of
/// the effective supports.
pub fn commutator(cfg: &RunConfig) -> CliResult<Outcome> {
    let reg = cfg.registry()?;
    require_functions(&reg, 2)?;
    let field = cfg.field()?;
    let ids: Vec<FnId> = reg.ids().collect();
    let table = GramTable::build(&reg, &field, cfg.method)?;
    let mut t = ResultTable::new(&["f", "g", "re", "im", "separation"], provenance("commutator", cfg));
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            let c = tfreg_core::Pairing::commutator(&table, FieldLabel::new(i), FieldLabel::new(j))?;
            t.push(vec![
                reg.name(i)?.into(),
                reg.name(j)?.into(),
                c.re.into(),
                c.im.into(),
                separation_name(reg.get(i)?, reg.get(j)?).into(),
            ]);
        }
    }
    Ok(Outcome::ok(t))
}

/// All perfect matchings of `0..n` as index pairs.
pub fn matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..].iter().enumerate().filter(|(i, _)| *i + 1 != k).map(|(_, v)| *v).collect();
        for mut m in matchings(&rest) {
            m.insert(0, (first, items[k]));
            out.push(m);
        }
    }
    out
}

/// Registers the conjugate of every function in `ids` that lacks one, so a
/// Fock space over the result can represent `phi_f` and `phi_f^dagger`.
pub fn with_conjugates(reg: &mut Registry, ids: &[FnId]) -> CliResult<Vec<FnId>> {
    let mut basis = ids.to_vec();
    for &id in ids {
        let name = format!("~{}", reg.name(id)?);
        let c = match reg.find(&name) {
            Some(c) => c,
            None => {
                let f = reg.get(id)?.conj();
                reg.register(name, f)?
            }
        };
        basis.push(c);
    }
    Ok(basis)
}

/// Largest matching size printed row by row.
const MAX_LISTED_MATCHINGS: usize = 6;

/// `<0| phi_1 ... phi_n |0>` by pairings, recursion and Fock matrices.
pub fn vev(cfg: &RunConfig) -> CliResult<Outcome> {
    let vc = cfg.vev.as_ref().ok_or_else(|| config_err("the vev command needs a [vev] section"))?;
    if vc.labels.is_empty() {
        return Err(config_err("vev.labels must not be empty"));
    }
    let mut reg = cfg.registry()?;
    let labels: Vec<FieldLabel> = vc.labels.iter().map(|l| parse_field_label(&reg, l)).collect::<CliResult<_>>()?;
    let n = labels.len();
    let mut used: Vec<FnId> = labels.iter().map(|l| l.id).collect();
    used.sort();
    used.dedup();
    let basis = with_conjugates(&mut reg, &used)?;
    let field = cfg.field()?;
    let table = GramTable::build_for(&reg, &field, cfg.method, &basis)?;
    let wick = Wick::new(&table);

    let mut t = ResultTable::new(&["kind", "key", "re", "im"], provenance("vev", cfg));
    if n % 2 == 0 && n <= MAX_LISTED_MATCHINGS {
        let idx: Vec<usize> = (0..n).collect();
        for m in matchings(&idx) {
            let mut v = Complex64::new(1.0, 0.0);
            for &(i, j) in &m {
                v *= wick.vev_recursive(&[labels[i], labels[j]])?;
            }
            let key: String = m.iter().map(|(i, j)| format!("({},{})", vc.labels[*i], vc.labels[*j])).collect::<Vec<_>>().join("");
            t.push(vec!["matching".into(), key.into(), v.re.into(), v.im.into()]);
        }
    }
    let mut push = |kind: &str, v: Complex64| t.push(vec![kind.into(), vc.labels.join(" ").into(), v.re.into(), v.im.into()]);
    if n <= tfreg_core::wick::MAX_PAIRINGS {
        push("sum_pairings", wick.vev_pairings(&labels)?);
    }
    push("recursive", wick.vev_recursive(&labels)?);
    let max_particles = vc.max_particles.unwrap_or(n / 2).max(1);
    let spec = FockSpec::build(&basis, &table, max_particles)?;
    push("fock", spec.vev(&labels, &table)?);
    Ok(Outcome::ok(t))
}

/// Contracted envelopes of one function at the configured centres.
pub fn envelope(cfg: &RunConfig) -> CliResult<Outcome> {
    let ec = cfg.envelope_table.as_ref().ok_or_else(|| config_err("the envelope command needs an [envelope_table] section"))?;
    ec.envelope.validate().map_err(|e| config_err(e.to_string()))?;
    if ec.centers.is_empty() {
        return Err(config_err("envelope_table.centers must not be empty"));
    }
    let reg = cfg.registry()?;
    let f = reg.get(lookup(&reg, &ec.function)?)?;
    for c in &ec.centers {
        cfg.dim().check(c).map_err(|e| config_err(e.to_string()))?;
    }
    let field = cfg.field()?;
    let ff = field.pair_with(f, f, cfg.method)?.re;
    let lambda = ec.scale.evaluate(ff)?;
    let mut t = ResultTable::new(
        &["center", "lambda", "integral_re", "integral_im", "norm", "t_lo", "t_hi"],
        provenance("envelope", cfg),
    );
    for x in &ec.centers {
        let h = envelope_at(f, &ec.envelope, ec.normalization, lambda, x)?;
        let integral = h.integral()?;
        let hh = field.pair_with(&h, &h, cfg.method)?.re;
        if !(hh > 0.0) {
            return Err(Error::Degenerate(format!("envelope at {x:?} vanishes")).into());
        }
        let b = h.effective_support(DEFAULT_EPS);
        t.push(vec![
            fmt_point(x).into(),
            lambda.into(),
            integral.re.into(),
            integral.im.into(),
            hh.into(),
            b.lo[0].into(),
            b.hi[0].into(),
        ]);
    }
    Ok(Outcome::ok(t))
}

/// Fock space over the listed functions after removing null modes.
pub fn gns(cfg: &RunConfig, out: &Path) -> CliResult<Outcome> {
    let gc = cfg.gns.as_ref().ok_or_else(|| config_err("the gns command needs a [gns] section"))?;
    if gc.functions.is_empty() {
        return Err(config_err("gns.functions must not be empty"));
    }
    let reg = cfg.registry()?;
    let ids: Vec<FnId> = gc.functions.iter().map(|n| lookup(&reg, n)).collect::<CliResult<_>>()?;
    let field = cfg.field()?;
    let table = GramTable::build_for(&reg, &field, cfg.method, &ids)?;
    let spec = FockSpec::build(&ids, &table, gc.max_particles)?;
    let gram = table.gram(&ids)?;
    let recon = spec.reconstructed_gram();
    let trace = spec.trace();
    let recon_err = gram.iter().zip(&recon).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / trace;

    let mut t = ResultTable::new(&["quantity", "value"], provenance("gns", cfg));
    t.push(vec!["basis_size".into(), ids.len().into()]);
    t.push(vec!["modes".into(), spec.modes().into()]);
    t.push(vec!["max_particles".into(), gc.max_particles.into()]);
    t.push(vec!["fock_dimension".into(), spec.dim().into()]);
    t.push(vec!["gram_trace".into(), trace.into()]);
    t.push(vec!["min_gram_eigenvalue".into(), spec.min_gram_eigenvalue().into()]);
    t.push(vec!["reconstruction_error".into(), recon_err.into()]);
    let mut messages = vec![format!("Fock dimension {}", spec.dim())];
    if gc.write_number_operator {
        std::fs::create_dir_all(out)?;
        let path = out.join("gns_number.fockmat");
        let mut w = BufWriter::new(File::create(&path)?);
        spec.number_operator().write_binary(&mut w)?;
        messages.push(format!("number operator written to {}", path.display()));
    }
    Ok(Outcome { table: t, messages, failed: false })
}

/// First-order nonlinear field `xi_f`: its coefficients, scalar summaries
/// and probe expectation values.
pub fn xi(cfg: &RunConfig) -> CliResult<Outcome> {
    let xc = cfg.xi.as_ref().ok_or_else(|| config_err("the xi command needs an [xi] section"))?;
    let spec = cfg.interaction.as_ref().ok_or_else(|| config_err("the xi command needs an [interaction] section"))?;
    let mut reg = cfg.registry()?;
    let f = lookup(&reg, &xc.function)?;
    let probes: Vec<FnId> = xc.probes.iter().map(|n| lookup(&reg, n)).collect::<CliResult<_>>()?;
    let field: FreeField = cfg.field()?;
    let inter = Interaction::build(&mut reg, f, spec, &field, cfg.method, &probes)?;
    let xi = inter.xi_first_order()?;
    let wick = inter.wick();

    let mut t = ResultTable::new(&["section", "key", "re", "im"], provenance("xi", cfg));
    let scalar = |t: &mut ResultTable, section: &str, key: &str, v: f64| {
        t.push(vec![section.into(), key.into(), v.into(), 0.0.into()]);
    };
    scalar(&mut t, "summary", "lambda", inter.lambda);
    scalar(&mut t, "summary", "centers", inter.locals.len() as f64);
    scalar(&mut t, "summary", "dropped_centers", inter.dropped as f64);
    if !spec.is_free() {
        scalar(&mut t, "summary", "loop_scalar", inter.loop_scalar()?);
    }
    scalar(&mut t, "summary", "first_order_2pt", inter.first_order_two_point()?);
    for (key, c) in xi.terms() {
        let name = monomial_name(&reg, &key.creators, &key.annihilators)?;
        t.push(vec!["xi".into(), name.into(), c.re.into(), c.im.into()]);
    }
    for (&p, name) in probes.iter().zip(&xc.probes) {
        let v = wick.mul(&OperatorPoly::field(FieldLabel::dagger(p)), &xi)?.vacuum_expectation();
        t.push(vec!["probe".into(), name.as_str().into(), v.re.into(), v.im.into()]);
        match inter.retarded_form_check(p) {
            Ok(r) => scalar(&mut t, "retarded_residual", name, r),
            Err(Error::Geometry(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome::ok(t))
}

/// Observable along a packet family as `mu` varies.
pub fn sweep(cfg: &RunConfig) -> CliResult<Outcome> {
    let sc = cfg.sweep.as_ref().ok_or_else(|| config_err("the sweep command needs a [sweep] section"))?;
    let spec = cfg.interaction.as_ref().ok_or_else(|| config_err("the sweep command needs an [interaction] section"))?;
    if sc.family.dim().map_err(|e| config_err(e.to_string()))? != cfg.dim() {
        return Err(config_err("sweep.family dimension differs from the run dimension"));
    }
    let field = cfg.field()?;
    let rows = mu_sweep(&sc.family, &sc.mu, spec, &field, cfg.method, sc.observable).map_err(|e| match e {
        Error::InvalidParameter(m) => config_err(m),
        other => other.into(),
    })?;
    let mut t = ResultTable::new(&["mu", "observable", "width", "norm"], provenance("sweep", cfg));
    for r in rows {
        t.push(vec![r.mu.into(), r.observable.into(), r.width.into(), r.norm.into()]);
    }
    Ok(Outcome::ok(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matchings_count_is_double_factorial() {
        assert_eq!(matchings(&[0, 1]).len(), 1);
        assert_eq!(matchings(&[0, 1, 2, 3]).len(), 3);
        assert_eq!(matchings(&[0, 1, 2, 3, 4, 5]).len(), 15);
        for m in matchings(&[0, 1, 2, 3, 4, 5]) {
            let mut seen: Vec<usize> = m.iter().flat_map(|&(a, b)| [a, b]).collect();
            seen.sort();
            assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
            assert!(m.iter().all(|(a, b)| a < b));
        }
    }
}

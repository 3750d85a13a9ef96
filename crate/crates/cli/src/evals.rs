//! Direct evaluation subcommands: closed forms printed to stdout, no
//! output directory involved.

use anyhow::{bail, Context, Result};
use serde::Serialize;

use proctensor_core::analytic::{
    self, avg_state_ti, avg_state_ti_k1, bk_bound, concentration_c, epsilon_scale, lipschitz_eta,
    purity_of_avg_state_ti_k1, BoundInputs,
};
use proctensor_core::linalg::ComplexMatrix;
use proctensor_core::process::InteractionMode;
use proctensor_core::symgroup::{partitions, rational_to_f64, CycleType, WeingartenTable};

use crate::config::mode_name;
use crate::records::SUMMARY_SCHEMA_VERSION;

fn format_class(t: &CycleType) -> String {
    t.parts().iter().map(|p| p.to_string()).collect::<Vec<_>>().join("+")
}

fn parse_class(text: &str, n: usize) -> Result<CycleType> {
    let parts: Vec<usize> = text
        .split(['+', ','])
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad cycle part {p:?}")))
        .collect::<Result<_>>()?;
    let t = CycleType::new(parts)?;
    if t.n() != n {
        bail!("cycle type {} sums to {}, expected n = {n}", format_class(&t), t.n());
    }
    Ok(t)
}

/// One line per cycle type: exact rational and double value.
pub fn wg_eval(n: usize, d: u64, cycle_type: Option<&str>) -> Result<()> {
    let table = WeingartenTable::build(n, d)?;
    let classes = match cycle_type {
        Some(text) => vec![parse_class(text, n)?],
        None => partitions(n),
    };
    for t in classes {
        let w = table
            .get(&t)
            .with_context(|| format!("no value for class {}", format_class(&t)))?;
        println!(
            "n={n} d={d} class={} exact={} double={:e}",
            format_class(&t),
            w,
            rational_to_f64(w)
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundReport {
    schema_version: u32,
    d_e: usize,
    d_s: usize,
    k: usize,
    mode: &'static str,
    avg_purity: f64,
    eta: f64,
    c: f64,
    bk: f64,
    epsilon_scale: f64,
    tail_bound_at_scale: f64,
}

/// JSON with the distance bound and concentration constants at one point.
pub fn bound_eval(
    d_e: usize,
    d_s: usize,
    k: usize,
    mode: InteractionMode,
    purity_override: Option<f64>,
) -> Result<()> {
    let avg_purity = match purity_override {
        Some(p) => p,
        None => match mode {
            InteractionMode::Random => analytic::ergodic_avg_purity(d_e, d_s, k)?,
            InteractionMode::Constant => {
                rational_to_f64(&analytic::ti_avg_purity(d_e, d_s, k).context(
                    "constant-interaction purity unavailable here; pass --purity or use \
                     the ti-k3 feature for k = 3",
                )?)
            }
        },
    };
    let inputs = BoundInputs::new(d_e, d_s, k, avg_purity)?;
    let eps = epsilon_scale(d_e);
    let c = concentration_c(d_e, d_s, k, mode);
    let report = BoundReport {
        schema_version: SUMMARY_SCHEMA_VERSION,
        d_e,
        d_s,
        k,
        mode: mode_name(mode),
        avg_purity,
        eta: lipschitz_eta(d_s, k),
        c,
        bk: bk_bound(&inputs)?,
        epsilon_scale: eps,
        tail_bound_at_scale: analytic::tail_bound(eps, c),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct PurityReport {
    schema_version: u32,
    family: &'static str,
    d_e: usize,
    d_s: usize,
    k: usize,
    exact: String,
    value: f64,
}

/// JSON with the exact average purity, ergodic or constant-interaction.
pub fn purity_eval(family: &str, d_e: usize, d_s: usize, k: usize) -> Result<()> {
    let (family, exact) = match family {
        "ergodic" => ("ergodic", analytic::ergodic_avg_purity_exact(d_e, d_s, k)?),
        "ti" => ("ti", analytic::ti_avg_purity(d_e, d_s, k)?),
        other => bail!("unknown purity family {other:?}"),
    };
    let report = PurityReport {
        schema_version: SUMMARY_SCHEMA_VERSION,
        family,
        d_e,
        d_s,
        k,
        exact: exact.to_string(),
        value: rational_to_f64(&exact),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct AvgStateReport {
    schema_version: u32,
    d_e: usize,
    d_s: usize,
    k: usize,
    dim: usize,
    purity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    purity_closed_form: Option<f64>,
    entries_re: Vec<Vec<f64>>,
    entries_im: Vec<Vec<f64>>,
}

fn basis_zero_density(d: usize) -> ComplexMatrix {
    let mut rho = ComplexMatrix::zeros(d, d);
    rho[(0, 0)] = num_complex::Complex64::new(1.0, 0.0);
    rho
}

/// JSON dump of the constant-interaction average Choi state for a pure
/// |0><0| system marginal; k = 1 uses the closed form directly.
pub fn avg_state_eval(d_e: usize, d_s: usize, k: usize) -> Result<()> {
    let rho = basis_zero_density(d_s);
    let state = if k == 1 {
        avg_state_ti_k1(d_e, d_s, &rho)?
    } else {
        avg_state_ti(k, d_e, d_s, &rho)?
    };
    let dim = state.dim();
    let purity_closed_form =
        (k == 1).then(|| purity_of_avg_state_ti_k1(d_e, d_s, 1.0)).transpose()?;
    let m = &state.matrix;
    let report = AvgStateReport {
        schema_version: SUMMARY_SCHEMA_VERSION,
        d_e,
        d_s,
        k,
        dim,
        purity: state.purity(),
        purity_closed_form,
        entries_re: (0..dim).map(|i| (0..dim).map(|j| m[(i, j)].re).collect()).collect(),
        entries_im: (0..dim).map(|i| (0..dim).map(|j| m[(i, j)].im).collect()).collect(),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

//! Browser bindings. Each export takes plain numbers and strings and returns
//! a JSON string; errors surface as JS exceptions carrying the message.

use permnet::demo::{run_shift_demo, ShiftBarsConfig};
use permnet::equivariant::{count_components, frequency_order};
use permnet::invariant::invariant_space;
use permnet::spectral::{commutant_dimension, eigen_multiplicities, Field};
use permnet::Permutation;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// `n = 0` takes the largest label appearing in the text.
fn parse_perm(text: &str, n: usize) -> permnet::Result<Permutation> {
    let n = if n > 0 {
        n
    } else {
        text.split(|c: char| !c.is_ascii_digit())
            .filter_map(|t| t.parse::<usize>().ok())
            .max()
            .unwrap_or(0)
    };
    Permutation::parse(text, n)
}

pub fn analyze_json(perm: &str, n: usize) -> permnet::Result<String> {
    let p = parse_perm(perm, n)?;
    let c = p.cycles();
    let spec = eigen_multiplicities(&c);
    let partition = invariant_space(std::slice::from_ref(&p), 1, p.n(), 1)?.partition;
    let d: Vec<_> = spec.multiplicities.iter().map(|(l, d)| json!({ "l": l, "d": d })).collect();
    let report = json!({
        "n": p.n(),
        "cycles": c.one_based(),
        "cycle_type": c.lengths(),
        "order": p.order(),
        "multiplicities": d,
        "commutant_dimension": commutant_dimension(&c),
        "invariant_blocks": partition.k(),
        "real_blocks": spec.real_blocks,
        "frequency_order": frequency_order(&spec),
    });
    Ok(report.to_string())
}

pub fn count_text(perm: &str, n: usize, rank: usize, field: &str) -> permnet::Result<String> {
    let p = parse_perm(perm, n)?;
    let field: Field = field.parse()?;
    Ok(count_components(&eigen_multiplicities(&p.cycles()), rank, field).to_string())
}

pub fn shift_demo_json(
    height: usize,
    width: usize,
    samples: usize,
    seed: u64,
    rank: usize,
    equal: usize,
    skip: usize,
) -> permnet::Result<String> {
    let cfg = ShiftBarsConfig {
        height,
        width,
        samples,
        seed,
        ..ShiftBarsConfig::default()
    };
    let report = run_shift_demo(&cfg, rank, equal, skip)?;
    Ok(serde_json::to_string(&report).expect("reports serialize"))
}

fn js(e: permnet::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Cycle structure, multiplicities, commutant dimension and block layout.
#[wasm_bindgen]
pub fn analyze(perm: &str, n: usize) -> Result<String, JsError> {
    analyze_json(perm, n).map_err(js)
}

/// Number of components of the rank-bounded equivariant variety, as decimal text.
#[wasm_bindgen]
pub fn count(perm: &str, n: usize, rank: usize, field: &str) -> Result<String, JsError> {
    count_text(perm, n, rank, field).map_err(js)
}

/// Autoencoder losses of the four architectures on shifted-bars images.
#[wasm_bindgen(js_name = shiftDemo)]
pub fn shift_demo(
    height: usize,
    width: usize,
    samples: usize,
    seed: u32,
    rank: usize,
    equal: usize,
    skip: usize,
) -> Result<String, JsError> {
    shift_demo_json(height, width, samples, seed.into(), rank, equal, skip).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_infers_n() {
        let v: serde_json::Value = serde_json::from_str(&analyze_json("(1 4 3 2)(5 8 7 6)", 9).unwrap()).unwrap();
        assert_eq!(v["commutant_dimension"], 21);
        let v: serde_json::Value = serde_json::from_str(&analyze_json("(1 2)(3 4)", 0).unwrap()).unwrap();
        assert_eq!(v["n"], 4);
    }

    #[test]
    fn count_and_errors() {
        assert_eq!(count_text("(1 4 3 2)(5 8 7 6)", 9, 3, "real").unwrap(), "5");
        assert!(count_text("(1 2", 0, 1, "real").is_err());
        assert!(count_text("(1 2)", 0, 1, "quaternion").is_err());
    }

    #[test]
    fn small_demo_runs() {
        let v: serde_json::Value =
            serde_json::from_str(&shift_demo_json(4, 8, 100, 0, 8, 1, 2).unwrap()).unwrap();
        assert_eq!(v["architectures"].as_array().unwrap().len(), 4);
    }
}

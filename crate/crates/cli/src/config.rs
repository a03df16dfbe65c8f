//! Flat `key = value` study configuration files with `#` comments.

use std::collections::BTreeMap;
use std::path::Path;

use sparsehaz::penalty::{
    DEFAULT_ENET_ALPHA, DEFAULT_MCP_A, DEFAULT_SCAD_A, DEFAULT_SICA_A, DEFAULT_SICA_A_FINAL,
};
use sparsehaz::solver::{FitConfig, FitMethod};
use sparsehaz::{Error, Penalty, Result, SimStudyConfig};

#[derive(Debug, Clone)]
pub struct StudyFileConfig {
    pub sim: SimStudyConfig,
    pub fit: FitConfig,
    pub folds: usize,
    pub methods: Vec<FitMethod>,
    pub method_names: Vec<String>,
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "config line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn take_parse<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T> {
    match map.remove(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<T>()
            .map_err(|_| Error::Config(format!("config key {key}: cannot parse {v:?}"))),
    }
}

pub fn load_study_config(path: &Path) -> Result<StudyFileConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut map = parse_kv(&text)?;

    let n = take_parse(&mut map, "n", 200usize)?;
    let p = take_parse(&mut map, "p", 50usize)?;
    let rho = take_parse(&mut map, "rho", 0.1f64)?;
    let beta0 = match map.remove("beta0") {
        None => sparsehaz::simulate::paper_design_beta0(),
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("beta0 entry {s:?} is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?,
    };
    let sim = SimStudyConfig {
        n,
        p,
        rho,
        beta0,
        target_censoring: take_parse(&mut map, "target_censoring", 0.25f64)?,
        weak_effect_count: take_parse(&mut map, "weak_effect_count", 0usize)?,
        weak_effect_eps: take_parse(&mut map, "weak_effect_eps", 0.0f64)?,
        replicates: take_parse(&mut map, "replicates", 10usize)?,
        seed: take_parse(&mut map, "seed", 0u64)?,
        test_n: take_parse(&mut map, "test_n", 500usize)?,
    };
    sim.validate()?;

    let fit = FitConfig {
        tol: take_parse(&mut map, "tol", 1e-7f64)?,
        max_sweeps: take_parse(&mut map, "max_sweeps", 10_000usize)?,
        max_active: match map.remove("max_active") {
            None => None,
            Some(v) => Some(v.parse::<usize>().map_err(|_| {
                Error::Config(format!("config key max_active: cannot parse {v:?}"))
            })?),
        },
        grid_size: take_parse(&mut map, "lambda_count", 100usize)?,
        grid_ratio: take_parse(&mut map, "lambda_ratio", 1e-3f64)?,
        check_convexity: true,
    };
    fit.validate()?;

    let folds = take_parse(&mut map, "folds", 10usize)?;

    let scad_a = take_parse(&mut map, "scad_a", DEFAULT_SCAD_A)?;
    let mcp_a = take_parse(&mut map, "mcp_a", DEFAULT_MCP_A)?;
    let sica_a = take_parse(&mut map, "sica_a", DEFAULT_SICA_A)?;
    let sica_a_final = take_parse(&mut map, "sica_a_final", DEFAULT_SICA_A_FINAL)?;
    let enet_alpha = take_parse(&mut map, "enet_alpha", DEFAULT_ENET_ALPHA)?;

    let method_list = map
        .remove("methods")
        .unwrap_or_else(|| "lasso,scad,mcp,sica,enet".to_string());
    let mut methods = Vec::new();
    let mut method_names = Vec::new();
    for name in method_list.split(',') {
        let name = name.trim();
        let method = match name {
            "lasso" => FitMethod::Single(Penalty::l1()),
            "scad" => FitMethod::Single(Penalty::scad(scad_a)?),
            "mcp" => FitMethod::Single(Penalty::mcp(mcp_a)?),
            "sica" => {
                if sica_a_final < sica_a {
                    FitMethod::sica_staged(vec![sica_a, sica_a_final])?
                } else {
                    FitMethod::Single(Penalty::sica(sica_a)?)
                }
            }
            "enet" => FitMethod::Single(Penalty::elastic_net(enet_alpha)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown method {other:?}; expected lasso, scad, mcp, sica or enet"
                )))
            }
        };
        methods.push(method);
        method_names.push(name.to_string());
    }
    if methods.is_empty() {
        return Err(Error::Config("methods list is empty".into()));
    }

    if let Some(key) = map.keys().next() {
        return Err(Error::Config(format!("unknown config key {key:?}")));
    }

    Ok(StudyFileConfig {
        sim,
        fit,
        folds,
        methods,
        method_names,
    })
}

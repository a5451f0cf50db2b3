//! Named configurations, numbered fig3 to fig13.

use toml::Table;

use crate::config::{CliError, CliResult};

const FIDELITY_SCHEMES: &str = r#"schemes = ["exact", "redfield", "cp_redfield", "global", "local", "mixture"]"#;

fn source(name: &str) -> Option<String> {
    let s = match name {
        // CP threshold against temperature; meant for `threshold` and `sweep --axis n0`.
        "fig3" => r#"
            schemes = ["cp_redfield"]
            model = { n0 = 10.0, g = 0.3 }
        "#
        .to_string(),
        "fig4" => r#"
            schemes = ["exact", "global", "local"]
            model = { n0 = 10.0, g = 0.3 }
            grid = { start = 0.0, stop = 300.0, count = 601 }
        "#
        .to_string(),
        "fig5" => r#"
            schemes = ["exact", "cp_redfield", "redfield"]
            model = { n0 = 10.0, g = 0.3 }
            grid = { start = 0.0, stop = 300.0, count = 601 }
        "#
        .to_string(),
        "fig6" => r#"
            schemes = ["exact", "cp_redfield", "global", "local"]
            model = { n0 = 10.0, g = 0.3 }
            grid = { start = 0.0, stop = 600.0, count = 601 }
        "#
        .to_string(),
        "fig7" => r#"
            schemes = ["redfield", "cp_redfield", "global", "local"]
            model = { n0 = 10.0, g = 0.3 }
            grid = { start = 0.0, stop = 20.0, count = 401 }
        "#
        .to_string(),
        "fig8" => r#"
            schemes = ["global", "local"]
            reference = "global"
            model = { n0 = 10.0, g = 0.3 }
            grid = { start = 0.0, stop = 300.0, count = 601 }
        "#
        .to_string(),
        "fig9" => format!(
            "{FIDELITY_SCHEMES}\nmodel = {{ n0 = 10.0, g = 0.3 }}\ngrid = {{ start = 0.0, stop = 300.0, count = 601 }}"
        ),
        "fig10a" | "fig9a" => format!(
            "{FIDELITY_SCHEMES}\nmodel = {{ n0 = 10.0, g = 0.04 }}\ngrid = {{ start = 0.0, stop = 300.0, count = 601 }}"
        ),
        "fig10b" | "fig9b" => format!(
            "{FIDELITY_SCHEMES}\nmodel = {{ n0 = 0.01, g = 0.3 }}\ngrid = {{ start = 0.0, stop = 300.0, count = 601 }}"
        ),
        "fig11" => r#"
            schemes = ["exact"]
            model = { n0 = 10.0, g = 0.3, m = 50 }
            grid = { start = 0.0, stop = 400.0, count = 801 }
        "#
        .to_string(),
        "fig12a" => r#"
            schemes = ["exact"]
            model = { n0 = 10.0, g = 0.3 }
            grid = { start = 0.0, stop = 300.0, count = 601 }
        "#
        .to_string(),
        "fig12b" => r#"
            schemes = ["exact"]
            model = { n0 = 0.01, g = 0.3 }
            grid = { start = 0.0, stop = 300.0, count = 601 }
        "#
        .to_string(),
        "fig13" => r#"
            schemes = ["exact", "global", "local"]
            lamb_shift = true
            model = { n0 = 10.0, g = 0.3 }
            grid = { start = 0.0, stop = 300.0, count = 601 }
        "#
        .to_string(),
        _ => return None,
    };
    Some(s)
}

pub const NAMES: [&str; 15] = [
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig9a", "fig9b", "fig10a", "fig10b", "fig11", "fig12a",
    "fig12b", "fig13",
];

pub fn table(name: &str) -> CliResult<Table> {
    let src = source(name)
        .ok_or_else(|| CliError::Config(format!("unknown preset `{name}` (known: {})", NAMES.join(", "))))?;
    Ok(toml::from_str(&src).expect("preset tables are valid TOML"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Overrides, RunConfig};

    #[test]
    fn every_preset_validates() {
        for name in NAMES {
            let cfg = RunConfig::load(&Overrides { preset: Some(name.into()), ..Default::default() }).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

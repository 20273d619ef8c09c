use budgeval_core::estimators::pass_at_k_corpus;
use budgeval_core::{CapPolicy, ResultMatrix};

use crate::error::{CliError, Result};
use crate::output::{aligned_table, write_atomic, write_csv};
use crate::ScoreArgs;

pub const DEFAULT_KS: [u64; 9] = [1, 2, 4, 16, 64, 128, 256, 500, 1000];
/// Cell text for a k beyond the model's cap.
pub const UNAVAILABLE: &str = "--.-";

pub fn cap_policy(no_cap: bool) -> CapPolicy {
    if no_cap {
        CapPolicy::NoCap
    } else {
        CapPolicy::HalfN
    }
}

struct ModelRow {
    model: String,
    greedy: Option<f64>,
    cells: Vec<String>,
}

pub fn run(args: &ScoreArgs) -> Result<()> {
    let explicit = args.k.is_some();
    let ks: Vec<u64> = args.k.clone().unwrap_or_else(|| DEFAULT_KS.to_vec());
    if ks.is_empty() || ks.contains(&0) {
        return Err(CliError::validation("--k values must be at least 1"));
    }
    let cap = cap_policy(args.no_cap);

    let mut rows = Vec::new();
    for named in &args.verdicts {
        let matrix = ResultMatrix::load(&named.path)?;
        let counts = matrix.pass_counts();
        let min_n = counts.values().map(|c| c.n()).filter(|&n| n > 0).min().ok_or_else(|| {
            CliError::validation(format!("{}: no sampled verdicts for model `{}`", named.path.display(), named.name))
        })?;
        let max_k = cap.max_k(min_n);
        let mut cells = Vec::with_capacity(ks.len());
        for &k in &ks {
            if k > max_k {
                if explicit {
                    let hint = if args.no_cap { "" } else { "; pass --no-cap to allow up to n" };
                    return Err(CliError::validation(format!(
                        "k = {k} exceeds the cap {max_k} for model `{}` (smallest n = {min_n}){hint}",
                        named.name
                    )));
                }
                cells.push(UNAVAILABLE.to_string());
                continue;
            }
            cells.push(pass_at_k_corpus(&counts, k)?.display());
        }
        rows.push(ModelRow {
            model: named.name.clone(),
            greedy: matrix.greedy_pass_at_1(),
            cells,
        });
    }
    rows.sort_by(|a, b| a.model.cmp(&b.model));

    let with_greedy = rows.iter().any(|r| r.greedy.is_some());
    let mut header = vec!["model".to_string()];
    if with_greedy {
        header.push("greedy".to_string());
    }
    header.extend(ks.iter().map(|k| format!("pass@{k}")));
    let table: Vec<Vec<String>> = rows
        .into_iter()
        .map(|r| {
            let mut row = vec![r.model];
            if with_greedy {
                row.push(r.greedy.map(|g| format!("{g:.1}")).unwrap_or_else(|| UNAVAILABLE.to_string()));
            }
            row.extend(r.cells);
            row
        })
        .collect();

    crate::check_out_dir(&args.out)?;
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&args.out.join("pass_at_k.csv"), &header_refs, &table)?;
    let text = aligned_table(&header, &table);
    write_atomic(&args.out.join("pass_at_k.txt"), |w| w.write_all(text.as_bytes()))?;
    print!("{text}");
    Ok(())
}

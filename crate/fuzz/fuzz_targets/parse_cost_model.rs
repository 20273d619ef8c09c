#![no_main]

use budgeval_core::budget::CostModelFile;
use budgeval_core::{Budget, BudgetKind, BudgetUnit, CostModel};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = CostModelFile::parse(text) {
        let _ = file.violations();
    }
    let Ok(cm) = CostModel::from_json(text) else { return };
    let models: Vec<String> = cm.models().map(str::to_owned).collect();
    for model in &models {
        for kind in [BudgetKind::Flops, BudgetKind::Time] {
            for unit in [BudgetUnit::Absolute, BudgetUnit::Normalized] {
                for value in [1e-9, 1.0, 14.19, 1e12] {
                    let budget = Budget::new(kind, value, unit).unwrap();
                    let _ = cm.max_k_under_budget(model, &budget);
                }
            }
        }
    }
    assert_eq!(CostModel::from_json(&cm.to_json()).unwrap(), cm);
});

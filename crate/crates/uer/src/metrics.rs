//! Newline-delimited JSON stage metrics: one object per stage, keys in
//! declaration order of [`StageMetrics`], absent groups omitted.

use std::fs;
use std::path::Path;

use uer_core::StageMetrics;

use crate::error::IoError;

pub fn to_jsonl(metrics: &[StageMetrics]) -> Result<String, IoError> {
    let mut out = String::new();
    for m in metrics {
        out.push_str(&serde_json::to_string(m)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_jsonl(text: &str, path: &Path) -> Result<Vec<StageMetrics>, IoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| IoError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_metrics(metrics: &[StageMetrics], path: &Path) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    fs::write(path, to_jsonl(metrics)?).map_err(|e| IoError::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<Vec<StageMetrics>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    from_jsonl(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(stage: usize) -> StageMetrics {
        StageMetrics {
            stage,
            classes: vec![3, 1],
            accuracy_matrix_row: vec![0.5, 0.75],
            average_accuracy: 0.625,
            acc_previous: Some(0.5),
            acc_current: 0.75,
            norm_prev: Some(1.0 / 3.0),
            norm_curr: None,
            mean_w_prev: Some(-0.1),
            std_w_prev: Some(0.2),
            mean_w_curr: None,
            std_w_curr: None,
            mean_b_prev: Some(0.0),
            mean_b_curr: None,
            accumulated_param_change: 2.5,
            accumulated_param_change_prev: Some(2.5),
            accumulated_param_change_curr: None,
            avg_posterior: vec![0.4, 0.6],
            posterior_prev: Some(0.4),
            posterior_curr: None,
        }
    }

    #[test]
    fn keys_are_ordered_and_stable() {
        let line = to_jsonl(&[record(2)]).unwrap();
        assert!(line.starts_with(
            "{\"stage\":2,\"classes\":[3,1],\"accuracy_matrix_row\":[0.5,0.75],\"A_t\":0.625,"
        ));
        assert!(line.contains("\"mean_W_prev\":-0.1,\"std_W_prev\":0.2,"));
        assert!(!line.contains("norm_curr"));
        assert!(line.ends_with("}\n"));
    }

    #[test]
    fn jsonl_round_trip() {
        let ms = vec![record(1), record(2)];
        let text = to_jsonl(&ms).unwrap();
        let back = from_jsonl(&text, Path::new("m.jsonl")).unwrap();
        assert_eq!(back, ms);
        assert_eq!(to_jsonl(&back).unwrap(), text);
        assert!(matches!(
            from_jsonl("{}\n", Path::new("m")),
            Err(IoError::Parse { line: 1, .. })
        ));
    }
}

use serde::Deserialize;
use serde_json::Value;

use crate::corpus::{Benchmark, Generation, Problem};

/// Written to stderr by the guard when the program raises `AssertionError`.
pub const ASSERTION_SENTINEL: &str = "__BUDGEVAL_ASSERTION_FAILED__";

/// Exit status used by the guard after printing the sentinel.
const ASSERTION_EXIT: i32 = 3;

/// One stdin/stdout fixture of a full-program problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StdioCase {
    pub input: String,
    pub output: String,
}

#[derive(Deserialize)]
struct StdioPayload {
    inputs: Vec<Value>,
    outputs: Vec<Value>,
    #[serde(default)]
    fn_name: Option<String>,
}

fn fixture_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(lines) => lines
            .iter()
            .map(|l| l.as_str().map(str::to_owned))
            .collect::<Option<Vec<_>>>()
            .map(|ls| ls.join("\n")),
        _ => None,
    }
}

/// Reads an `{"inputs": [...], "outputs": [...]}` payload. Entries may be
/// strings or lists of lines. Returns `None` for anything else, including
/// call-based payloads that name an `fn_name`.
pub fn parse_stdio_cases(payload: &str) -> Option<Vec<StdioCase>> {
    let parsed: StdioPayload = serde_json::from_str(payload).ok()?;
    if parsed.fn_name.is_some() || parsed.inputs.len() != parsed.outputs.len() || parsed.inputs.is_empty() {
        return None;
    }
    parsed
        .inputs
        .iter()
        .zip(&parsed.outputs)
        .map(|(i, o)| {
            Some(StdioCase {
                input: fixture_text(i)?,
                output: fixture_text(o)?,
            })
        })
        .collect()
}

fn py_literal(text: &str) -> String {
    // A JSON string literal is also a valid Python 3 str literal.
    serde_json::to_string(text).expect("strings serialize")
}

fn join(parts: &[&str]) -> String {
    let mut out = String::new();
    for part in parts {
        if !out.is_empty() && !out.ends_with('\n') {
            out.push('\n');
        }
        out.push_str(part);
    }
    out
}

fn stdio_driver(program: &str, cases: &[StdioCase]) -> String {
    let pairs: Vec<[&str; 2]> = cases.iter().map(|c| [c.input.as_str(), c.output.as_str()]).collect();
    let cases_json = serde_json::to_string(&pairs).expect("strings serialize");
    format!(
        r#"import json as _bx_json
import subprocess as _bx_subprocess
import sys as _bx_sys

_bx_program = {program}
_bx_cases = _bx_json.loads({cases})


def _bx_norm(text):
    return "\n".join(line.rstrip() for line in text.strip().splitlines())


for _bx_i, (_bx_in, _bx_expected) in enumerate(_bx_cases):
    _bx_run = _bx_subprocess.run(
        [_bx_sys.executable, "-c", _bx_program],
        input=_bx_in,
        capture_output=True,
        text=True,
    )
    if _bx_run.returncode != 0:
        _bx_sys.stderr.write(_bx_run.stderr[-2000:])
        raise RuntimeError("program exited with status %d on case %d" % (_bx_run.returncode, _bx_i))
    if _bx_norm(_bx_run.stdout) != _bx_norm(_bx_expected):
        raise AssertionError("stdout mismatch on case %d" % _bx_i)
"#,
        program = py_literal(program),
        cases = py_literal(&cases_json),
    )
}

/// Builds the program whose clean exit means the candidate passed every test.
///
/// - function completion: prompt immediately followed by the candidate, then
///   the test payload, then `check(entry_point)` when the payload defines
///   `check`;
/// - instruction function: candidate, then test payload;
/// - full program: a stdin/stdout driver when the payload holds fixtures,
///   otherwise candidate then payload.
pub fn assemble_program(problem: &Problem, generation: &Generation) -> String {
    let payload = problem.test_payload.as_str();
    match problem.benchmark {
        Benchmark::FunctionCompletion => {
            let completed = format!("{}{}", problem.prompt, generation.text);
            let mut program = join(&[&completed, payload]);
            if let Some(entry) = &problem.entry_point {
                if payload.contains("def check(") {
                    program = join(&[&program, &format!("check({entry})\n")]);
                }
            }
            program
        }
        Benchmark::InstructionFunction => join(&[&generation.text, payload]),
        Benchmark::FullProgram => match parse_stdio_cases(payload) {
            Some(cases) => stdio_driver(&generation.text, &cases),
            None => join(&[&generation.text, payload]),
        },
    }
}

/// Wraps Python source so an uncaught `AssertionError` prints
/// [`ASSERTION_SENTINEL`] to stderr and exits with status 3.
pub fn python_guard(body: &str) -> String {
    format!(
        r#"import sys as _bx_sys

_bx_source = {source}
try:
    exec(compile(_bx_source, "<candidate>", "exec"), {{"__name__": "__main__", "__builtins__": __builtins__}})
except AssertionError:
    import traceback as _bx_traceback

    _bx_traceback.print_exc()
    _bx_sys.stderr.write("\n{sentinel}\n")
    _bx_sys.stderr.flush()
    _bx_sys.exit({code})
"#,
        source = py_literal(body),
        sentinel = ASSERTION_SENTINEL,
        code = ASSERTION_EXIT,
    )
}

/// The guarded program actually handed to the interpreter.
pub fn prepare_source(problem: &Problem, generation: &Generation) -> String {
    python_guard(&assemble_program(problem, generation))
}

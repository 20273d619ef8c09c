//! Problems, generations and score sidecars.
//!
//! All three record kinds are stored as JSONL (one JSON object per line,
//! UTF-8). Field names match the struct fields below exactly.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, LineError};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid record: {message}")]
    Invalid { line: usize, message: String },
    #[error("duplicate problem_id `{problem_id}` on lines {first_line} and {line}")]
    DuplicateProblem {
        problem_id: String,
        first_line: usize,
        line: usize,
    },
    #[error("line {line}: unknown problem_id `{problem_id}`")]
    UnknownProblem { line: usize, problem_id: String },
    #[error(
        "duplicate generation ({problem_id}, {candidate_index}, {mode}) on lines {first_line} and {line}"
    )]
    DuplicateGeneration {
        problem_id: String,
        candidate_index: u32,
        mode: SamplingMode,
        first_line: usize,
        line: usize,
    },
    #[error("problem `{problem_id}`: sampled candidate indices are not dense, missing {missing:?}")]
    NonDenseIndices {
        problem_id: String,
        missing: Vec<u32>,
    },
    #[error("line {line}: no {mode} generation ({problem_id}, {candidate_index}) to attach a score to")]
    ScoreAddressMiss {
        line: usize,
        problem_id: String,
        candidate_index: u32,
        mode: SamplingMode,
    },
    #[error("score address ({problem_id}, {candidate_index}) repeated on lines {first_line} and {line}")]
    DuplicateScore {
        problem_id: String,
        candidate_index: u32,
        first_line: usize,
        line: usize,
    },
}

impl CorpusError {
    fn from_line(err: LineError, path: Option<&Path>) -> Self {
        match err {
            LineError::Io(source) => CorpusError::Io {
                path: path.map(Path::to_path_buf).unwrap_or_default(),
                source,
            },
            LineError::Parse { line, message } => CorpusError::Parse { line, message },
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Benchmark family; decides how a candidate is assembled into a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    /// HumanEval style: the candidate continues the prompt.
    FunctionCompletion,
    /// MBPP style: the candidate is a whole function written from an instruction.
    InstructionFunction,
    /// APPS style: the candidate is a complete program.
    FullProgram,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub problem_id: String,
    pub benchmark: Benchmark,
    pub prompt: String,
    pub test_payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_point: Option<String>,
}

/// An ordered, id-unique collection of problems.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemSet {
    problems: Vec<Problem>,
    index: HashMap<String, usize>,
}

impl ProblemSet {
    pub fn new(problems: Vec<Problem>) -> Result<Self, CorpusError> {
        Self::from_numbered(problems.into_iter().enumerate().map(|(i, p)| (i + 1, p)))
    }

    fn from_numbered(records: impl IntoIterator<Item = (usize, Problem)>) -> Result<Self, CorpusError> {
        let mut problems = Vec::new();
        let mut index = HashMap::new();
        let mut lines: HashMap<String, usize> = HashMap::new();
        for (line, problem) in records {
            if problem.test_payload.trim().is_empty() {
                return Err(CorpusError::Invalid {
                    line,
                    message: format!("problem `{}` has an empty test_payload", problem.problem_id),
                });
            }
            if let Some(&first_line) = lines.get(&problem.problem_id) {
                return Err(CorpusError::DuplicateProblem {
                    problem_id: problem.problem_id,
                    first_line,
                    line,
                });
            }
            lines.insert(problem.problem_id.clone(), line);
            index.insert(problem.problem_id.clone(), problems.len());
            problems.push(problem);
        }
        Ok(ProblemSet { problems, index })
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let records = jsonl::read_records(reader).map_err(|e| CorpusError::from_line(e, None))?;
        Self::from_numbered(records)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for p in &self.problems {
            jsonl::write_record(&mut writer, p)?;
        }
        Ok(())
    }

    pub fn get(&self, problem_id: &str) -> Option<&Problem> {
        self.index.get(problem_id).map(|&i| &self.problems[i])
    }

    pub fn contains(&self, problem_id: &str) -> bool {
        self.index.contains_key(problem_id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Problem> {
        self.problems.iter()
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Reads a problem file. Input order is preserved.
pub fn load_problems(path: impl AsRef<Path>) -> Result<ProblemSet, CorpusError> {
    let path = path.as_ref();
    let records = jsonl::read_records(open(path)?).map_err(|e| CorpusError::from_line(e, Some(path)))?;
    ProblemSet::from_numbered(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Sampled,
    Greedy,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::Sampled => "sampled",
            SamplingMode::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generation {
    pub problem_id: String,
    pub candidate_index: u32,
    pub text: String,
    /// True iff the model emitted end-of-sequence before its token cap.
    pub completed: bool,
    #[serde(default)]
    pub mode: SamplingMode,
    /// Ranker model id -> natural-log probabilities of the generated tokens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_scores: Option<BTreeMap<String, f64>>,
}

impl Generation {
    pub fn external_score(&self, name: &str) -> Option<f64> {
        self.external_scores.as_ref()?.get(name).copied()
    }

    pub fn logprobs(&self, model: &str) -> Option<&[f64]> {
        self.token_logprobs.as_ref()?.get(model).map(Vec::as_slice)
    }

    fn check_logprobs(&self) -> Result<(), String> {
        for (model, values) in self.token_logprobs.iter().flatten() {
            if values.is_empty() {
                return Err(format!("token_logprobs[{model}] is empty"));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite() || **v > 0.0) {
                return Err(format!("token_logprobs[{model}] contains {v}, expected finite values <= 0"));
            }
        }
        Ok(())
    }
}

/// Generations belonging to one problem. Sampled generations are kept sorted
/// by `candidate_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemGenerations {
    pub problem_id: String,
    pub sampled: Vec<Generation>,
    pub greedy: Vec<Generation>,
}

impl ProblemGenerations {
    /// Number of sampled generations (symbol `n` of the pass@k estimator).
    pub fn n(&self) -> usize {
        self.sampled.len()
    }
}

/// Generations grouped by problem, in the problem set's order. Every problem
/// of the owning set has a group, possibly empty.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSet {
    groups: Vec<ProblemGenerations>,
    index: HashMap<String, usize>,
}

impl GenerationSet {
    /// Groups `generations` under `problems`. Sampled candidate indices must be
    /// dense `0..n` per problem.
    pub fn new(problems: &ProblemSet, generations: Vec<Generation>) -> Result<Self, CorpusError> {
        Self::from_numbered(problems, generations.into_iter().enumerate().map(|(i, g)| (i + 1, g)))
    }

    fn from_numbered(
        problems: &ProblemSet,
        records: impl IntoIterator<Item = (usize, Generation)>,
    ) -> Result<Self, CorpusError> {
        let mut groups: Vec<ProblemGenerations> = problems
            .iter()
            .map(|p| ProblemGenerations {
                problem_id: p.problem_id.clone(),
                sampled: Vec::new(),
                greedy: Vec::new(),
            })
            .collect();
        let index: HashMap<String, usize> = groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.problem_id.clone(), i))
            .collect();

        let mut seen: HashMap<(String, u32, SamplingMode), usize> = HashMap::new();
        for (line, generation) in records {
            let Some(&slot) = index.get(&generation.problem_id) else {
                return Err(CorpusError::UnknownProblem {
                    line,
                    problem_id: generation.problem_id,
                });
            };
            generation
                .check_logprobs()
                .map_err(|message| CorpusError::Invalid { line, message })?;
            let key = (
                generation.problem_id.clone(),
                generation.candidate_index,
                generation.mode,
            );
            if let Some(&first_line) = seen.get(&key) {
                return Err(CorpusError::DuplicateGeneration {
                    problem_id: key.0,
                    candidate_index: key.1,
                    mode: key.2,
                    first_line,
                    line,
                });
            }
            seen.insert(key, line);
            match generation.mode {
                SamplingMode::Sampled => groups[slot].sampled.push(generation),
                SamplingMode::Greedy => groups[slot].greedy.push(generation),
            }
        }

        for group in &mut groups {
            group.sampled.sort_by_key(|g| g.candidate_index);
            group.greedy.sort_by_key(|g| g.candidate_index);
            let missing = missing_indices(group.sampled.iter().map(|g| g.candidate_index));
            if !missing.is_empty() {
                return Err(CorpusError::NonDenseIndices {
                    problem_id: group.problem_id.clone(),
                    missing,
                });
            }
        }
        Ok(GenerationSet { groups, index })
    }

    pub fn parse<R: BufRead>(reader: R, problems: &ProblemSet) -> Result<Self, CorpusError> {
        let records = jsonl::read_records(reader).map_err(|e| CorpusError::from_line(e, None))?;
        Self::from_numbered(problems, records)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for g in self.iter_all() {
            jsonl::write_record(&mut writer, g)?;
        }
        Ok(())
    }

    pub fn groups(&self) -> &[ProblemGenerations] {
        &self.groups
    }

    pub fn group(&self, problem_id: &str) -> Option<&ProblemGenerations> {
        self.index.get(problem_id).map(|&i| &self.groups[i])
    }

    /// Every generation, sampled before greedy within each problem.
    pub fn iter_all(&self) -> impl Iterator<Item = &Generation> {
        self.groups
            .iter()
            .flat_map(|g| g.sampled.iter().chain(g.greedy.iter()))
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.sampled.len() + g.greedy.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Count of sampled generations per problem.
    pub fn n_per_problem(&self) -> BTreeMap<String, usize> {
        self.groups
            .iter()
            .map(|g| (g.problem_id.clone(), g.n()))
            .collect()
    }

    /// Problems without any sampled generation.
    pub fn empty_problems(&self) -> Vec<&str> {
        self.groups
            .iter()
            .filter(|g| g.sampled.is_empty())
            .map(|g| g.problem_id.as_str())
            .collect()
    }

    /// Attaches every record of the sidecar at `path` as `external_scores[score_name]`.
    pub fn attach_scores(self, path: impl AsRef<Path>, score_name: &str) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let records = jsonl::read_records(open(path)?).map_err(|e| CorpusError::from_line(e, Some(path)))?;
        self.attach_score_records(records, score_name)
    }

    pub fn attach_scores_from<R: BufRead>(self, reader: R, score_name: &str) -> Result<Self, CorpusError> {
        let records = jsonl::read_records(reader).map_err(|e| CorpusError::from_line(e, None))?;
        self.attach_score_records(records, score_name)
    }

    fn attach_score_records(
        mut self,
        records: Vec<(usize, ScoreRecord)>,
        score_name: &str,
    ) -> Result<Self, CorpusError> {
        let mut seen: HashMap<(String, u32, SamplingMode), usize> = HashMap::new();
        for (line, record) in records {
            let key = (record.problem_id.clone(), record.candidate_index, record.mode);
            if let Some(&first_line) = seen.get(&key) {
                return Err(CorpusError::DuplicateScore {
                    problem_id: record.problem_id,
                    candidate_index: record.candidate_index,
                    first_line,
                    line,
                });
            }
            seen.insert(key, line);
            let target = self.index.get(&record.problem_id).and_then(|&slot| {
                let group = &mut self.groups[slot];
                let pool = match record.mode {
                    SamplingMode::Sampled => &mut group.sampled,
                    SamplingMode::Greedy => &mut group.greedy,
                };
                pool.iter_mut()
                    .find(|g| g.candidate_index == record.candidate_index)
            });
            let Some(generation) = target else {
                return Err(CorpusError::ScoreAddressMiss {
                    line,
                    problem_id: record.problem_id,
                    candidate_index: record.candidate_index,
                    mode: record.mode,
                });
            };
            generation
                .external_scores
                .get_or_insert_with(BTreeMap::new)
                .insert(score_name.to_string(), record.score);
        }
        Ok(self)
    }

    /// Drops generations that hit the token cap. Candidate indices keep their
    /// original values.
    pub fn filter_complete(self) -> Self {
        let groups = self
            .groups
            .into_iter()
            .map(|g| ProblemGenerations {
                problem_id: g.problem_id,
                sampled: g.sampled.into_iter().filter(|x| x.completed).collect(),
                greedy: g.greedy.into_iter().filter(|x| x.completed).collect(),
            })
            .collect();
        GenerationSet {
            groups,
            index: self.index,
        }
    }
}

fn missing_indices(sorted: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut missing = Vec::new();
    let mut expected = 0u32;
    for idx in sorted {
        while expected < idx {
            missing.push(expected);
            expected += 1;
        }
        expected = idx + 1;
    }
    missing
}

/// Reads a generation file against `problems`.
pub fn load_generations(path: impl AsRef<Path>, problems: &ProblemSet) -> Result<GenerationSet, CorpusError> {
    let path = path.as_ref();
    let records = jsonl::read_records(open(path)?).map_err(|e| CorpusError::from_line(e, Some(path)))?;
    GenerationSet::from_numbered(problems, records)
}

/// One line of a score sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub problem_id: String,
    pub candidate_index: u32,
    #[serde(default, skip_serializing_if = "is_sampled")]
    pub mode: SamplingMode,
    pub score: f64,
}

fn is_sampled(mode: &SamplingMode) -> bool {
    *mode == SamplingMode::Sampled
}

pub fn parse_score_records<R: BufRead>(reader: R) -> Result<Vec<ScoreRecord>, CorpusError> {
    let records = jsonl::read_records(reader).map_err(|e| CorpusError::from_line(e, None))?;
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

pub fn write_score_records<W: Write>(mut writer: W, records: &[ScoreRecord]) -> std::io::Result<()> {
    for r in records {
        jsonl::write_record(&mut writer, r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(id: &str) -> Problem {
        Problem {
            problem_id: id.to_string(),
            benchmark: Benchmark::FunctionCompletion,
            prompt: "def f():\n".to_string(),
            test_payload: "assert f() == 1".to_string(),
            entry_point: Some("f".to_string()),
        }
    }

    fn gen(id: &str, idx: u32, completed: bool) -> Generation {
        Generation {
            problem_id: id.to_string(),
            candidate_index: idx,
            text: format!("    return {idx}\n"),
            completed,
            mode: SamplingMode::Sampled,
            token_logprobs: None,
            external_scores: None,
        }
    }

    fn problems_jsonl(ids: &[&str]) -> String {
        let mut buf = Vec::new();
        for id in ids {
            jsonl::write_record(&mut buf, &problem(id)).unwrap();
        }
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn loads_problems_in_order() {
        let ids: Vec<String> = (0..164).map(|i| format!("HumanEval/{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let set = ProblemSet::parse(problems_jsonl(&refs).as_bytes()).unwrap();
        assert_eq!(set.len(), 164);
        assert_eq!(set.iter().nth(7).unwrap().problem_id, "HumanEval/7");
    }

    #[test]
    fn empty_problem_file() {
        let set = ProblemSet::parse("".as_bytes()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn duplicate_problem_cites_both_lines() {
        let ids = ["a", "b", "he_7", "c", "d", "e", "f", "g", "he_7"];
        let err = ProblemSet::parse(problems_jsonl(&ids).as_bytes()).unwrap_err();
        match err {
            CorpusError::DuplicateProblem {
                problem_id,
                first_line,
                line,
            } => {
                assert_eq!(problem_id, "he_7");
                assert_eq!((first_line, line), (3, 9));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_line_is_named() {
        let text = format!("{}{{not json\n", problems_jsonl(&["a"]));
        match ProblemSet::parse(text.as_bytes()).unwrap_err() {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_test_payload_rejected() {
        let mut p = problem("a");
        p.test_payload = "  ".into();
        assert!(matches!(
            ProblemSet::new(vec![p]),
            Err(CorpusError::Invalid { .. })
        ));
    }

    #[test]
    fn counts_only_sampled() {
        let problems = ProblemSet::new(vec![problem("p1"), problem("p2")]).unwrap();
        let mut gens: Vec<Generation> = (0..2000).map(|i| gen("p1", i, true)).collect();
        let mut greedy = gen("p1", 0, true);
        greedy.mode = SamplingMode::Greedy;
        gens.push(greedy);
        let set = GenerationSet::new(&problems, gens).unwrap();
        let n = set.n_per_problem();
        assert_eq!(n["p1"], 2000);
        assert_eq!(n["p2"], 0);
        assert_eq!(set.empty_problems(), vec!["p2"]);
        assert_eq!(set.group("p1").unwrap().greedy.len(), 1);
    }

    #[test]
    fn gaps_are_listed() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let gens = vec![gen("p1", 0, true), gen("p1", 1, true), gen("p1", 3, true)];
        match GenerationSet::new(&problems, gens).unwrap_err() {
            CorpusError::NonDenseIndices { missing, .. } => assert_eq!(missing, vec![2]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_problem_rejected() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let err = GenerationSet::new(&problems, vec![gen("zz", 0, true)]).unwrap_err();
        assert!(matches!(err, CorpusError::UnknownProblem { line: 1, .. }));
    }

    #[test]
    fn invalid_logprobs_rejected() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let mut g = gen("p1", 0, true);
        g.token_logprobs = Some(BTreeMap::from([("m".to_string(), vec![-0.1, 0.5])]));
        assert!(matches!(
            GenerationSet::new(&problems, vec![g.clone()]),
            Err(CorpusError::Invalid { .. })
        ));
        g.token_logprobs = Some(BTreeMap::from([("m".to_string(), vec![])]));
        assert!(GenerationSet::new(&problems, vec![g]).is_err());
    }

    #[test]
    fn duplicate_generation_rejected() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let err = GenerationSet::new(&problems, vec![gen("p1", 0, true), gen("p1", 0, false)]).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::DuplicateGeneration {
                first_line: 1,
                line: 2,
                ..
            }
        ));
    }

    fn sidecar(records: &[(&str, u32, f64)]) -> String {
        let recs: Vec<ScoreRecord> = records
            .iter()
            .map(|(p, i, s)| ScoreRecord {
                problem_id: p.to_string(),
                candidate_index: *i,
                mode: SamplingMode::Sampled,
                score: *s,
            })
            .collect();
        let mut buf = Vec::new();
        write_score_records(&mut buf, &recs).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn two_sidecars_both_present() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let set = GenerationSet::new(&problems, (0..3).map(|i| gen("p1", i, true)).collect()).unwrap();
        let set = set
            .attach_scores_from(sidecar(&[("p1", 0, 0.3), ("p1", 1, 0.1), ("p1", 2, 0.2)]).as_bytes(), "nll_13b")
            .unwrap()
            .attach_scores_from(sidecar(&[("p1", 0, 0.9), ("p1", 2, 0.4)]).as_bytes(), "lever")
            .unwrap();
        let g = &set.group("p1").unwrap().sampled;
        assert_eq!(g[0].external_score("nll_13b"), Some(0.3));
        assert_eq!(g[0].external_score("lever"), Some(0.9));
        assert_eq!(g[1].external_score("lever"), None);
        assert_eq!(g[2].external_score("lever"), Some(0.4));
        assert_eq!(g[1].text, "    return 1\n");
    }

    #[test]
    fn sidecar_address_miss() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let set = GenerationSet::new(&problems, (0..2000).map(|i| gen("p1", i, true)).collect()).unwrap();
        let err = set
            .attach_scores_from(sidecar(&[("p1", 9999, 1.0)]).as_bytes(), "x")
            .unwrap_err();
        assert!(matches!(
            err,
            CorpusError::ScoreAddressMiss {
                candidate_index: 9999,
                ..
            }
        ));
    }

    #[test]
    fn sidecar_duplicate_address() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let set = GenerationSet::new(&problems, vec![gen("p1", 0, true)]).unwrap();
        let err = set
            .attach_scores_from(sidecar(&[("p1", 0, 1.0), ("p1", 0, 2.0)]).as_bytes(), "x")
            .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateScore { .. }));
    }

    #[test]
    fn filter_keeps_original_indices() {
        let problems = ProblemSet::new(vec![problem("p1"), problem("p2")]).unwrap();
        let mut gens: Vec<Generation> = (0..2000)
            .map(|i| gen("p1", i, ![7, 19, 33].contains(&(i % 40))))
            .collect();
        gens.push(gen("p2", 0, false));
        let set = GenerationSet::new(&problems, gens).unwrap().filter_complete();
        let n = set.n_per_problem();
        assert_eq!(n["p1"], 1850);
        assert_eq!(n["p2"], 0);
        let p1 = &set.group("p1").unwrap().sampled;
        assert_eq!(p1[7].candidate_index, 8);
    }

    #[test]
    fn filter_identity_when_all_complete() {
        let problems = ProblemSet::new(vec![problem("p1")]).unwrap();
        let set = GenerationSet::new(&problems, (0..5).map(|i| gen("p1", i, true)).collect()).unwrap();
        assert_eq!(set.clone().filter_complete(), set);
    }

    #[test]
    fn missing_indices_detects_leading_gap() {
        assert_eq!(missing_indices([2u32, 3].into_iter()), vec![0, 1]);
        assert!(missing_indices(std::iter::empty()).is_empty());
    }
}

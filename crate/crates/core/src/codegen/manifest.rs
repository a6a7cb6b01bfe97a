use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spec::{parse_access, KernelShape, KernelSpec, Layout};

/// Ordered list of kernels to generate.
///
/// Text format, one kernel per line:
///
/// ```text
/// # layout   N  M  K  access(A,B,C)
/// ColMajor   2  3  4  cis
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KernelManifest {
    pub entries: Vec<KernelSpec>,
    pub source: PathBuf,
}

impl KernelManifest {
    pub fn new(entries: Vec<KernelSpec>, source: impl Into<PathBuf>) -> Self {
        KernelManifest {
            entries,
            source: source.into(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        parse_manifest_from(&text, path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First spec that appears more than once, if any.
    pub fn first_duplicate(&self) -> Option<&KernelSpec> {
        let mut seen = std::collections::HashSet::new();
        self.entries.iter().find(|s| !seen.insert(**s))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.entries {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                s.layout,
                s.shape.n(),
                s.shape.m(),
                s.shape.k(),
                s.access_suffix()
            ));
        }
        out
    }
}

pub fn parse_manifest(text: &str) -> Result<KernelManifest> {
    parse_manifest_from(text, Path::new("<manifest>"))
}

pub fn parse_manifest_from(text: &str, source: &Path) -> Result<KernelManifest> {
    let mut entries = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        if tokens.is_empty() {
            continue;
        }
        let syntax = |column: usize, message: String| Error::Syntax {
            path: source.display().to_string(),
            line: line_no + 1,
            column,
            message,
        };
        if tokens.len() != 5 {
            return Err(syntax(
                tokens[0].0,
                format!(
                    "expected `<Layout> <N> <M> <K> <abc>`, found {} fields",
                    tokens.len()
                ),
            ));
        }
        entries.push(parse_spec_tokens(&tokens, syntax)?);
    }
    Ok(KernelManifest::new(entries, source))
}

/// Whitespace-separated tokens with their 1-based byte column.
pub(crate) fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Parses the leading `<Layout> <N> <M> <K> <abc>` tokens of a line.
pub(crate) fn parse_spec_tokens(
    tokens: &[(usize, &str)],
    syntax: impl Fn(usize, String) -> Error,
) -> Result<KernelSpec> {
    let (col, layout) = tokens[0];
    let layout: Layout = layout
        .parse()
        .map_err(|_| syntax(col, format!("unknown layout `{layout}` (ColMajor or RowMajor)")))?;

    let mut dims = [0usize; 3];
    for (slot, (&(col, tok), label)) in dims.iter_mut().zip(tokens[1..4].iter().zip(["N", "M", "K"])) {
        let v: usize = tok
            .parse()
            .map_err(|_| syntax(col, format!("{label} is not a decimal integer: `{tok}`")))?;
        if v == 0 {
            return Err(syntax(col, format!("{label} must be >= 1")));
        }
        *slot = v;
    }

    let (col, access) = tokens[4];
    let access = parse_access(access).ok_or_else(|| {
        syntax(
            col,
            format!("bad access string `{access}`, expected three of c/s/i"),
        )
    })?;
    let shape = KernelShape::new(dims[0], dims[1], dims[2])?;
    Ok(KernelSpec::new(layout, shape, access))
}

//! Dataset sources and checksum verification. Nothing is downloaded here:
//! archives are fetched by hand (or by a script) and unpacked into the data
//! directory, after which `fetch` checks layout and content hashes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use gefrfe::io::{DatasetFormat, DatasetManifest, LETTER_SPLITS};
use sha2::{Digest, Sha256};

use crate::CliError;

const TUD_URL: &str = "https://www.chrsmrrs.com/graphkerneldatasets";
const IAM_URL: &str = "https://fki.tic.heia-fr.ch/databases/iam-graph-database";
const CHECKSUM_FILE: &str = "SHA256SUMS";

fn source(name: &str, format: DatasetFormat) -> String {
    match format {
        DatasetFormat::Tud => format!("{TUD_URL}/{name}.zip"),
        _ => format!("{IAM_URL} (Letter database)"),
    }
}

fn required_files(m: &DatasetManifest) -> Vec<PathBuf> {
    match m.format {
        DatasetFormat::Tud => ["A", "graph_indicator", "graph_labels"]
            .iter()
            .map(|s| m.root.join(format!("{}_{s}.txt", m.name)))
            .collect(),
        DatasetFormat::Gxl => LETTER_SPLITS.iter().map(|s| m.root.join(s)).collect(),
        DatasetFormat::Jsonl => vec![m.root.clone()],
    }
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f
            .read(&mut buf)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
            .path();
        if path.is_dir() {
            walk(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

fn rel(data_dir: &Path, path: &Path) -> String {
    path.strip_prefix(data_dir)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

fn read_checksums(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(CliError::Data(format!("{}: {e}", path.display()))),
    };
    let mut sums = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (hash, file) = line
            .split_once("  ")
            .ok_or_else(|| CliError::Data(format!("{}:{}: malformed line", path.display(), i + 1)))?;
        sums.insert(file.to_string(), hash.to_string());
    }
    Ok(sums)
}

pub fn fetch(data_dir: &Path, dataset: Option<&str>, write_checksums: bool) -> Result<(), CliError> {
    let names: Vec<&str> = match dataset {
        Some(d) => vec![d],
        None => DatasetManifest::preset_names().collect(),
    };
    let sums_path = data_dir.join(CHECKSUM_FILE);
    let mut sums = read_checksums(&sums_path)?;
    let mut problems = Vec::new();

    for name in names {
        let m = DatasetManifest::preset(name, data_dir)?;
        println!("{}: {}", m.name, source(&m.name, m.format));
        let missing: Vec<_> = required_files(&m).into_iter().filter(|p| !p.exists()).collect();
        if !missing.is_empty() {
            for p in &missing {
                println!("  missing {}", p.display());
            }
            println!("  unpack the archive so that it lands in {}", m.root.display());
            problems.push(format!("{}: {} required files missing", m.name, missing.len()));
            continue;
        }
        let mut files = Vec::new();
        walk(&m.root, &mut files)?;
        files.sort();
        let (mut ok, mut unknown) = (0usize, 0usize);
        for f in files {
            let key = rel(data_dir, &f);
            let hash = sha256_file(&f)?;
            match sums.get(&key) {
                Some(want) if *want == hash => ok += 1,
                Some(_) if !write_checksums => {
                    println!("  checksum mismatch {key}");
                    problems.push(format!("{key}: checksum mismatch"));
                }
                _ => {
                    unknown += 1;
                    if write_checksums {
                        sums.insert(key, hash);
                    }
                }
            }
        }
        println!("  {ok} files verified, {unknown} without recorded checksum");
    }

    if write_checksums {
        let body: String = sums.iter().map(|(f, h)| format!("{h}  {f}\n")).collect();
        fs::write(&sums_path, body).map_err(|e| CliError::Data(format!("{}: {e}", sums_path.display())))?;
        println!("wrote {}", sums_path.display());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(problems.join("; ")))
    }
}

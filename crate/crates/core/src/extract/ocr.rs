use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::BinaryBandImage;
use crate::{pgm, Error, Result};

pub const DEFAULT_OCR_TIMEOUT: Duration = Duration::from_secs(10);
pub const IMAGE_PLACEHOLDER: &str = "{img}";

/// An external OCR invocation, e.g. `tesseract {img} stdout`.
///
/// The template is split on whitespace (single and double quotes group
/// words, without escapes); every `{img}` is replaced with the
/// path of a temporary PGM holding the band (black text on white). Standard
/// output is the recognized text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcrCommand {
    args: Vec<String>,
    timeout: Duration,
}

impl OcrCommand {
    pub fn parse(template: &str) -> Result<Self> {
        let args = split_template(template)?;
        if args.is_empty() {
            return Err(Error::Config("OCR command template is empty".into()));
        }
        if !args.iter().any(|a| a.contains(IMAGE_PLACEHOLDER)) {
            return Err(Error::Config(format!(
                "OCR command template has no {IMAGE_PLACEHOLDER} placeholder: {template:?}"
            )));
        }
        Ok(OcrCommand {
            args,
            timeout: DEFAULT_OCR_TIMEOUT,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Writes `image` to a temporary file and runs the command on it.
    pub fn recognize(&self, image: &BinaryBandImage) -> Result<String> {
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let path = dir.path().join("band.pgm");
        pgm::write_pgm(&path, image.width, image.height, &image.to_gray_bytes())?;
        self.run_on(&path)
    }

    pub fn run_on(&self, image_path: &Path) -> Result<String> {
        let img = image_path.to_string_lossy();
        let argv: Vec<String> = self.args.iter().map(|a| a.replace(IMAGE_PLACEHOLDER, &img)).collect();
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::Config(format!("OCR command not found: {}", argv[0])),
                _ => Error::io(&argv[0], e),
            })?;

        let mut out = child.stdout.take().expect("piped");
        let mut err = child.stderr.take().expect("piped");
        let out_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = out.read_to_end(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = err.read_to_end(&mut buf);
            buf
        });

        let start = Instant::now();
        let status = loop {
            match child.try_wait().map_err(|e| Error::io(&argv[0], e))? {
                Some(status) => break status,
                None if start.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::CommandTimeout(self.timeout));
                }
                None => thread::sleep(Duration::from_millis(5)),
            }
        };
        let stdout = out_reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(Error::CommandFailed {
                status: status.to_string(),
                stderr: String::from_utf8_lossy(&stderr).trim().to_owned(),
            });
        }
        Ok(String::from_utf8_lossy(&stdout).trim().to_owned())
    }
}

fn split_template(template: &str) -> Result<Vec<String>> {
    let mut args = Vec::new();
    let mut cur = String::new();
    let mut in_word = false;
    let mut quote: Option<char> = None;
    for c in template.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => cur.push(c),
            None if c == '"' || c == '\'' => {
                quote = Some(c);
                in_word = true;
            }
            None if c.is_whitespace() => {
                if in_word {
                    args.push(std::mem::take(&mut cur));
                    in_word = false;
                }
            }
            None => {
                cur.push(c);
                in_word = true;
            }
        }
    }
    if quote.is_some() {
        return Err(Error::Config(format!("unbalanced quote in OCR command template: {template:?}")));
    }
    if in_word {
        args.push(cur);
    }
    Ok(args)
}

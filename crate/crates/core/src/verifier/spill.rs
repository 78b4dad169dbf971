//! External sort for `(fingerprint, partition text)` records: sorted runs are
//! spilled to temporary files and read back through a k-way merge.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub(crate) struct RunWriter {
    dir: PathBuf,
    tag: u64,
    limit: usize,
    pending: Vec<(u64, String)>,
    runs: Vec<PathBuf>,
}

impl RunWriter {
    pub(crate) fn new(dir: &Path, tag: u64, limit: usize) -> Self {
        Self {
            dir: dir.to_path_buf(),
            tag,
            limit: limit.max(1),
            pending: Vec::new(),
            runs: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, fingerprint: u64, text: String) -> io::Result<()> {
        self.pending.push((fingerprint, text));
        if self.pending.len() >= self.limit {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        self.pending.sort_unstable();
        let path = self
            .dir
            .join(format!("run-{:08}-{:06}", self.tag, self.runs.len()));
        let mut out = BufWriter::new(File::create(&path)?);
        for (fp, text) in self.pending.drain(..) {
            writeln!(out, "{fp:016x}\t{text}")?;
        }
        out.flush()?;
        self.runs.push(path);
        Ok(())
    }

    pub(crate) fn finish(mut self) -> io::Result<Vec<PathBuf>> {
        self.flush()?;
        Ok(self.runs)
    }
}

/// Merges sorted run files, yielding records in `(fingerprint, text)` order.
pub(crate) struct Merge {
    readers: Vec<io::Lines<BufReader<File>>>,
    heap: BinaryHeap<Reverse<(String, usize)>>,
}

impl Merge {
    pub(crate) fn open(runs: &[PathBuf]) -> io::Result<Self> {
        let mut readers = Vec::with_capacity(runs.len());
        let mut heap = BinaryHeap::new();
        for (i, path) in runs.iter().enumerate() {
            let mut lines = BufReader::new(File::open(path)?).lines();
            if let Some(line) = lines.next() {
                heap.push(Reverse((line?, i)));
            }
            readers.push(lines);
        }
        Ok(Self { readers, heap })
    }

    pub(crate) fn next_record(&mut self) -> io::Result<Option<(u64, String)>> {
        let Some(Reverse((line, i))) = self.heap.pop() else {
            return Ok(None);
        };
        if let Some(next) = self.readers[i].next() {
            self.heap.push(Reverse((next?, i)));
        }
        let (fp, text) = line
            .split_once('\t')
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "malformed run record"))?;
        let fp = u64::from_str_radix(fp, 16)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        Ok(Some((fp, text.to_string())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_yields_global_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut all = Vec::new();
        let mut runs = Vec::new();
        for tag in 0..3u64 {
            let mut w = RunWriter::new(dir.path(), tag, 4);
            for i in 0..11u64 {
                let fp = (i * 7 + tag * 13) % 9 + (u64::MAX - 20);
                let text = format!("{},{}", 11 - i, tag + 1);
                all.push((fp, text.clone()));
                w.push(fp, text).unwrap();
            }
            runs.extend(w.finish().unwrap());
        }
        assert_eq!(runs.len(), 9);
        all.sort();
        let mut merge = Merge::open(&runs).unwrap();
        let mut got = Vec::new();
        while let Some(rec) = merge.next_record().unwrap() {
            got.push(rec);
        }
        assert_eq!(got, all);
    }
}

use std::collections::{BTreeMap, HashMap};

/// Sparse vector as `(dimension, weight)` pairs sorted by dimension.
pub type SparseVec = Vec<(usize, f64)>;

/// Lowercased alphanumeric runs, with identifiers split on `_` and on
/// camelCase boundaries (`parseJSON` → `parse`, `json`;
/// `JSONParser` → `json`, `parser`).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let chars: Vec<char> = run.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = cur.is_uppercase()
                && (prev.is_lowercase()
                    || prev.is_numeric()
                    || (prev.is_uppercase() && next_lower));
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    out
}

pub fn cosine(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// TF-IDF index over file documents. Stored vectors are unit-norm or empty.
#[derive(Debug, Clone, Default)]
pub struct TfidfIndex {
    vocabulary: HashMap<String, usize>,
    idf: Vec<f64>,
    doc_ids: Vec<String>,
    doc_vectors: Vec<SparseVec>,
    /// dimension → `(doc, weight)` for every doc with that token.
    postings: Vec<Vec<(usize, f64)>>,
}

/// Documents are deduplicated by id (last wins) and stored in id order, so
/// the index does not depend on input order.
pub fn build_tfidf_index<I, S, T>(files: I) -> TfidfIndex
where
    I: IntoIterator<Item = (S, T)>,
    S: Into<String>,
    T: AsRef<str>,
{
    let docs: BTreeMap<String, Vec<String>> = files
        .into_iter()
        .map(|(id, text)| (id.into(), tokenize(text.as_ref())))
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tokens in docs.values() {
        let mut uniq: Vec<&str> = tokens.iter().map(String::as_str).collect();
        uniq.sort_unstable();
        uniq.dedup();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    let n = docs.len() as f64;
    let mut vocabulary = HashMap::with_capacity(df.len());
    let mut idf = Vec::with_capacity(df.len());
    for (dim, (tok, &d)) in df.iter().enumerate() {
        vocabulary.insert(tok.to_string(), dim);
        idf.push((n / (1.0 + d as f64)).ln() + 1.0);
    }

    let mut index = TfidfIndex {
        vocabulary,
        idf,
        doc_ids: Vec::with_capacity(docs.len()),
        doc_vectors: Vec::with_capacity(docs.len()),
        postings: Vec::new(),
    };
    index.postings = vec![Vec::new(); index.idf.len()];
    for (doc, (id, tokens)) in docs.iter().enumerate() {
        let v = index.weigh(tokens);
        for &(dim, w) in &v {
            index.postings[dim].push((doc, w));
        }
        index.doc_ids.push(id.clone());
        index.doc_vectors.push(v);
    }
    index
}

impl TfidfIndex {
    fn weigh(&self, tokens: &[String]) -> SparseVec {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens {
            if let Some(&dim) = self.vocabulary.get(t) {
                *tf.entry(dim).or_default() += 1.0;
            }
        }
        let mut v: SparseVec = tf.into_iter().map(|(d, c)| (d, c * self.idf[d])).collect();
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut v {
                *w /= norm;
            }
        } else {
            v.clear();
        }
        v
    }

    /// Unit-norm query vector; tokens outside the vocabulary are ignored.
    pub fn vectorize(&self, text: &str) -> SparseVec {
        self.weigh(&tokenize(text))
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.idf.len()
    }

    pub fn dimension(&self, token: &str) -> Option<usize> {
        self.vocabulary.get(token).copied()
    }

    pub fn idf(&self, dim: usize) -> f64 {
        self.idf[dim]
    }

    pub fn doc_vector(&self, id: &str) -> Option<&SparseVec> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(id))
            .ok()
            .map(|i| &self.doc_vectors[i])
    }

    pub fn docs(&self) -> impl Iterator<Item = (&str, &SparseVec)> {
        self.doc_ids
            .iter()
            .map(String::as_str)
            .zip(&self.doc_vectors)
    }

    /// Documents with positive cosine to `query`, cosine ≥ `tau` and
    /// accepted by `keep`, ranked by cosine descending then id ascending,
    /// truncated to `k`.
    pub fn top_k<F: Fn(&str) -> bool>(
        &self,
        query: &[(usize, f64)],
        k: usize,
        tau: f64,
        keep: F,
    ) -> Vec<(&str, f64)> {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for &(dim, qw) in query {
            for &(doc, dw) in &self.postings[dim] {
                *acc.entry(doc).or_default() += qw * dw;
            }
        }
        let mut hits: Vec<(&str, f64)> = acc
            .into_iter()
            .filter(|&(_, s)| s > 0.0 && s >= tau)
            .map(|(doc, s)| (self.doc_ids[doc].as_str(), s.min(1.0)))
            .filter(|(id, _)| keep(id))
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        hits.truncate(k);
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_splits_identifiers() {
        assert_eq!(tokenize("parseJSON fast"), ["parse", "json", "fast"]);
        assert_eq!(tokenize("JSONParser"), ["json", "parser"]);
        assert_eq!(
            tokenize("read_file_v2, utf8Decoder!"),
            ["read", "file", "v2", "utf8", "decoder"]
        );
        assert!(tokenize("  --  ").is_empty());
    }

    #[test]
    fn empty_doc_has_empty_vector_and_never_matches() {
        let idx = build_tfidf_index([("a", "alpha beta"), ("e", "")]);
        assert!(idx.doc_vector("e").unwrap().is_empty());
        let q = idx.vectorize("alpha beta");
        let hits = idx.top_k(&q, 3, 0.0, |_| true);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, "a");
    }

    #[test]
    fn identical_docs_have_unit_cosine() {
        let idx = build_tfidf_index([
            ("a", "foo bar bar baz"),
            ("b", "foo bar bar baz"),
            ("c", "q"),
        ]);
        let c = cosine(idx.doc_vector("a").unwrap(), idx.doc_vector("b").unwrap());
        assert!((c - 1.0).abs() < 1e-9);
        for (_, v) in idx.docs() {
            let n: f64 = v.iter().map(|(_, w)| w * w).sum();
            assert!(v.is_empty() || (n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn idf_formula() {
        let idx = build_tfidf_index([("a", "x y"), ("b", "x"), ("c", "z")]);
        let x = idx.dimension("x").unwrap();
        assert!((idx.idf(x) - ((3.0f64 / 3.0).ln() + 1.0)).abs() < 1e-15);
        let y = idx.dimension("y").unwrap();
        assert!((idx.idf(y) - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-15);
    }
}

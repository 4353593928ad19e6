//! JSON document format for programs.
//!
//! ```json
//! {"n": 2, "alphabet": {"kind": "counter", "k": 2},
//!  "layers": [1, 2, 3],
//!  "edges": [[[0, 1]], [[0, 1], [1, 2]]],
//!  "outputs": [["0", "2"], ["1", "1"], ["2", "0"]]}
//! ```
//!
//! `edges[t][v][s]` is the layer-`t+1` target of vertex `v` on symbol `s`.
//! Outputs are reduced rationals written `"p/q"` (or a bare integer).
//! Only syntax is checked here; structural rules are left to
//! [`validate`](crate::robp::validate).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational};
use crate::robp::{Alphabet, AlphabetKind, OutputsBuilder, Robp, NO_EDGE};

#[derive(Serialize, Deserialize)]
struct AlphabetDoc {
    kind: String,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct RobpDoc {
    n: usize,
    alphabet: AlphabetDoc,
    layers: Vec<usize>,
    edges: Vec<Vec<Vec<u32>>>,
    outputs: Vec<Vec<String>>,
}

pub fn write_robp(p: &Robp) -> String {
    let mut buf = Vec::new();
    write_robp_to(p, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}

pub fn write_robp_to<W: Write>(p: &Robp, mut out: W) -> Result<()> {
    let alphabet = p.alphabet();
    let sigma = alphabet.size();
    let doc = RobpDoc {
        n: p.n(),
        alphabet: AlphabetDoc {
            kind: match alphabet.kind() {
                AlphabetKind::Counter => "counter",
                AlphabetKind::Parallel => "parallel",
                AlphabetKind::Binary => "binary",
            }
            .to_string(),
            k: alphabet.k(),
        },
        layers: p.layer_sizes().to_vec(),
        edges: (0..p.n())
            .map(|t| p.layer_edges(t).chunks(sigma).map(<[u32]>::to_vec).collect())
            .collect(),
        outputs: p
            .outputs()
            .tuples()
            .iter()
            .map(|tuple| tuple.iter().map(format_rational).collect())
            .collect(),
    };
    serde_json::to_writer(&mut out, &doc).map_err(|e| std::io::Error::other(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_robp(text: &str) -> Result<Robp> {
    let doc: RobpDoc = serde_json::from_str(text).map_err(json_error)?;
    from_doc(doc)
}

pub fn read_robp_from<R: Read>(input: R) -> Result<Robp> {
    let doc: RobpDoc = serde_json::from_reader(input).map_err(json_error)?;
    from_doc(doc)
}

fn json_error(e: serde_json::Error) -> Error {
    Error::parse(
        format!("line {}, column {}", e.line(), e.column()),
        e.to_string(),
    )
}

fn from_doc(doc: RobpDoc) -> Result<Robp> {
    let alphabet = match doc.alphabet.kind.as_str() {
        "counter" => Alphabet::counter(doc.alphabet.k),
        "parallel" => Alphabet::parallel(doc.alphabet.k),
        "binary" if matches!(doc.alphabet.k, 1 | 2) => Ok(Alphabet::binary()),
        "binary" => Err(Error::precondition("binary alphabet takes k = 1 or k = 2")),
        other => Err(Error::precondition(format!("unknown alphabet kind {other:?}"))),
    }
    .map_err(|e| Error::parse("alphabet", e.to_string()))?;
    let sigma = alphabet.size();

    let mut edges = Vec::with_capacity(doc.edges.len());
    for (t, layer) in doc.edges.iter().enumerate() {
        let mut flat = Vec::with_capacity(layer.len() * sigma);
        for (v, targets) in layer.iter().enumerate() {
            if targets.len() > sigma {
                return Err(Error::parse(
                    format!("edges[{t}][{v}]"),
                    format!("{} edges for an alphabet of {sigma} symbols", targets.len()),
                ));
            }
            flat.extend_from_slice(targets);
            flat.extend(std::iter::repeat_n(NO_EDGE, sigma - targets.len()));
        }
        edges.push(flat);
    }

    let arity = doc.outputs.first().map_or(alphabet.arity(), Vec::len);
    let mut outputs = OutputsBuilder::new(arity);
    for (v, tuple) in doc.outputs.iter().enumerate() {
        if tuple.len() != arity {
            return Err(Error::parse(
                format!("outputs[{v}]"),
                format!("{} values, expected {arity}", tuple.len()),
            ));
        }
        let values = tuple
            .iter()
            .enumerate()
            .map(|(j, s)| {
                parse_rational(s).map_err(|e| Error::parse(format!("outputs[{v}][{j}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        outputs.push(&values);
    }

    Ok(Robp::from_parts(
        doc.n,
        alphabet,
        doc.layers,
        edges,
        outputs.finish(),
    ))
}

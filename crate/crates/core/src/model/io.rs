use std::io::{BufRead, Read, Write};

use super::HypergramModel;
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeId};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HYPERGRM";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Binary checkpoint: magic, version (u32), then `d`, `k`, `F`, `|V|` as
/// u64, then every parameter as an f64, all little-endian and row-major.
pub fn write_checkpoint<W: Write>(model: &HypergramModel, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for x in [model.dim, model.tuple_size, model.filter_count, model.node_count] {
        w.write_all(&(x as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(model.parameter_count() * 8);
    for x in model.parameters() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<HypergramModel> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    let version = u32::from_le_bytes(v);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let dim = read_u64(&mut r)? as usize;
    let k = read_u64(&mut r)? as usize;
    let filters = read_u64(&mut r)? as usize;
    let nodes = read_u64(&mut r)? as usize;
    if dim == 0 || (k == 0) != (filters == 0) {
        return Err(Error::Checkpoint("inconsistent shape".into()));
    }
    let mut model = HypergramModel {
        dim,
        node_count: nodes,
        tuple_size: k,
        filter_count: filters,
        center: vec![0.0; nodes * dim],
        context: vec![0.0; nodes * dim],
        kernels: vec![0.0; filters * dim],
        kernel_bias: vec![0.0; filters],
        dense_w: vec![0.0; filters],
        dense_b: 0.0,
    };
    let n = model.parameter_count();
    let mut bytes = Vec::with_capacity(n * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            n * 8,
            bytes.len()
        )));
    }
    for (i, c) in bytes.chunks_exact(8).enumerate() {
        *model.parameter_mut(i) = f64::from_le_bytes(c.try_into().unwrap());
    }
    if !model.is_finite() {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    Ok(model)
}

/// Text export of the center embeddings: `|V| d`, then one
/// `label v1 .. vd` line per node.
pub fn write_embeddings<W: Write>(model: &HypergramModel, g: &Hypergraph, mut w: W) -> Result<()> {
    if g.node_count() != model.node_count {
        return Err(Error::DimensionMismatch(g.node_count(), model.node_count));
    }
    writeln!(w, "{} {}", model.node_count, model.dim)?;
    for v in 0..model.node_count {
        let v = NodeId::from(v);
        write!(w, "{}", g.label(v))?;
        for x in model.center_row(v) {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an embedding export into a `|V| x d` matrix ordered by the node
/// ids of `g`.
pub fn read_embeddings<R: BufRead>(g: &Hypergraph, r: R) -> Result<(usize, Vec<f64>)> {
    let mut lines = r.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
    let (n, d) = match lines.next() {
        Some((i, line)) => {
            let line = line?;
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(n)), Some(Ok(d)), None) if d > 0 => (n, d),
                _ => return Err(parse_err(i, "expected header `|V| d`".into())),
            }
        }
        None => return Err(parse_err(0, "empty embedding file".into())),
    };
    if n != g.node_count() {
        return Err(Error::DimensionMismatch(g.node_count(), n));
    }
    let mut out = vec![0.0; n * d];
    let mut seen = vec![false; n];
    for (i, line) in lines {
        let line = line?;
        let mut it = line.split_whitespace();
        let Some(label) = it.next() else { continue };
        let v = g.node_by_label(label).ok_or_else(|| Error::UnknownNode {
            label: label.to_string(),
            line: i + 1,
        })?;
        let vals: Vec<f64> = it
            .map(|t| t.parse::<f64>().map_err(|e| parse_err(i, format!("bad value `{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != d {
            return Err(parse_err(i, format!("expected {d} values, found {}", vals.len())));
        }
        if std::mem::replace(&mut seen[v.index()], true) {
            return Err(parse_err(i, format!("duplicate node `{label}`")));
        }
        out[v.index() * d..(v.index() + 1) * d].copy_from_slice(&vals);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(parse_err(0, format!("missing node `{}`", g.label(NodeId::from(missing)))));
    }
    Ok((d, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::fixtures::*;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut m = HypergramModel::new(7, 3, 2, 3, 9);
        m.context.iter_mut().for_each(|x| *x = 1.0 / 3.0);
        m.dense_b = -0.25;
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        assert_eq!(&buf[..8], CHECKPOINT_MAGIC);
        assert_eq!(buf.len(), 8 + 4 + 32 + 8 * m.parameter_count());
        let back = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn corrupt_checkpoints_are_rejected() {
        let m = HypergramModel::new(2, 2, 0, 0, 0);
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_checkpoint(&bad[..]).is_err());
        let mut ver = buf.clone();
        ver[8] = 9;
        assert!(read_checkpoint(&ver[..]).is_err());
    }

    #[test]
    fn embeddings_round_trip() {
        let g = three_edges();
        let m = HypergramModel::new(g.node_count(), 4, 0, 0, 5);
        let mut buf = Vec::new();
        write_embeddings(&m, &g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{} 4\n", g.node_count())));
        let (d, rows) = read_embeddings(&g, &buf[..]).unwrap();
        assert_eq!(d, 4);
        assert_eq!(rows, m.center);
    }
}

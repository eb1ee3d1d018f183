//! Lookup structures keyed by encoded values.
//!
//! [`RncTree`] orders keys with the encoded less-than operator and gives
//! logarithmic lookups on balanced input. [`RncGrid`] indexes a dense
//! `m_0 x m_1 x ...` array by the canonical residues, so a lookup touches
//! exactly one cell. Neither structure decodes a key.

use crate::error::{Result, RncError};
use crate::ops::RncEngine;
use crate::rnc::{EncodedValue, ModuliSet, SetId};

#[derive(Clone, Debug)]
struct Node<P> {
    key: EncodedValue,
    payload: P,
    left: Option<usize>,
    right: Option<usize>,
}

/// Unbalanced binary search tree over encoded keys.
#[derive(Clone, Debug)]
pub struct RncTree<P> {
    set: SetId,
    nodes: Vec<Node<P>>,
    root: Option<usize>,
}

enum Probe {
    Found(usize),
    Vacant(Option<(usize, bool)>),
}

impl<P> RncTree<P> {
    pub fn new(set: &ModuliSet) -> Self {
        Self {
            set: set.id(),
            nodes: Vec::new(),
            root: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn probe(&self, engine: &mut RncEngine, key: &EncodedValue) -> Result<Probe> {
        if key.set_id() != self.set || engine.set().id() != self.set {
            return Err(RncError::ModuliMismatch);
        }
        let mut parent = None;
        let mut cursor = self.root;
        while let Some(i) = cursor {
            let node = &self.nodes[i];
            if engine.eq_enc(key, &node.key)? {
                return Ok(Probe::Found(i));
            }
            let go_left = engine.less_than(key, &node.key)?;
            parent = Some((i, go_left));
            cursor = if go_left { node.left } else { node.right };
        }
        Ok(Probe::Vacant(parent))
    }

    /// Inserts `payload` under `key`, returning the payload it replaced.
    pub fn insert(&mut self, engine: &mut RncEngine, key: EncodedValue, payload: P) -> Result<Option<P>> {
        match self.probe(engine, &key)? {
            Probe::Found(i) => Ok(Some(std::mem::replace(&mut self.nodes[i].payload, payload))),
            Probe::Vacant(parent) => {
                let idx = self.nodes.len();
                self.nodes.push(Node {
                    key,
                    payload,
                    left: None,
                    right: None,
                });
                match parent {
                    None => self.root = Some(idx),
                    Some((p, true)) => self.nodes[p].left = Some(idx),
                    Some((p, false)) => self.nodes[p].right = Some(idx),
                }
                Ok(None)
            }
        }
    }

    pub fn get(&self, engine: &mut RncEngine, key: &EncodedValue) -> Result<Option<&P>> {
        Ok(match self.probe(engine, key)? {
            Probe::Found(i) => Some(&self.nodes[i].payload),
            Probe::Vacant(_) => None,
        })
    }

    /// Keys in ascending order.
    pub fn keys_in_order(&self) -> Vec<&EncodedValue> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = Vec::new();
        let mut cursor = self.root;
        while cursor.is_some() || !stack.is_empty() {
            while let Some(i) = cursor {
                stack.push(i);
                cursor = self.nodes[i].left;
            }
            let i = stack.pop().expect("stack is non-empty");
            out.push(&self.nodes[i].key);
            cursor = self.nodes[i].right;
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn walk<P>(nodes: &[Node<P>], at: Option<usize>) -> usize {
            at.map_or(0, |i| 1 + walk(nodes, nodes[i].left).max(walk(nodes, nodes[i].right)))
        }
        walk(&self.nodes, self.root)
    }
}

impl<P: Clone> RncTree<P> {
    /// Builds a tree from pairs already sorted by key, inserting medians
    /// first so the result is height-balanced.
    pub fn from_sorted(
        engine: &mut RncEngine,
        entries: &[(EncodedValue, P)],
    ) -> Result<Self> {
        fn fill<P: Clone>(
            tree: &mut RncTree<P>,
            engine: &mut RncEngine,
            entries: &[(EncodedValue, P)],
        ) -> Result<()> {
            if entries.is_empty() {
                return Ok(());
            }
            let mid = entries.len() / 2;
            let (k, p) = &entries[mid];
            tree.insert(engine, k.clone(), p.clone())?;
            fill(tree, engine, &entries[..mid])?;
            fill(tree, engine, &entries[mid + 1..])
        }
        let mut tree = RncTree::new(engine.set());
        fill(&mut tree, engine, entries)?;
        Ok(tree)
    }
}

/// Linear-scan map over encoded keys; the comparison-count baseline for
/// [`RncTree`].
#[derive(Clone, Debug)]
pub struct LinearMap<P> {
    entries: Vec<(EncodedValue, P)>,
}

impl<P> Default for LinearMap<P> {
    fn default() -> Self {
        Self { entries: Vec::new() }
    }
}

impl<P> LinearMap<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, engine: &mut RncEngine, key: EncodedValue, payload: P) -> Result<Option<P>> {
        for (k, p) in &mut self.entries {
            if engine.eq_enc(&key, k)? {
                return Ok(Some(std::mem::replace(p, payload)));
            }
        }
        self.entries.push((key, payload));
        Ok(None)
    }

    pub fn get(&self, engine: &mut RncEngine, key: &EncodedValue) -> Result<Option<&P>> {
        for (k, p) in &self.entries {
            if engine.eq_enc(key, k)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }
}

/// Dense residue-indexed table: the entry for `v` lives at
/// `(v mod m_0, ..., v mod m_{u-1})`.
#[derive(Clone, Debug)]
pub struct RncGrid<P> {
    set: SetId,
    moduli: Vec<u64>,
    cells: Vec<Option<P>>,
}

impl<P> RncGrid<P> {
    pub fn new(set: &ModuliSet) -> Self {
        let cells = std::iter::repeat_with(|| None)
            .take(set.range() as usize)
            .collect();
        Self {
            set: set.id(),
            moduli: set.moduli().to_vec(),
            cells,
        }
    }

    /// Number of cells, equal to the dynamic range.
    pub fn capacity(&self) -> usize {
        self.cells.len()
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    fn index(&self, engine: &mut RncEngine, key: &EncodedValue) -> Result<usize> {
        if key.set_id() != self.set || engine.set().id() != self.set {
            return Err(RncError::ModuliMismatch);
        }
        let canon = engine.canonicalize(key)?;
        // row-major over the moduli, first modulus most significant
        let idx = canon
            .components()
            .iter()
            .zip(&self.moduli)
            .fold(0u64, |acc, (&r, &m)| acc * m + r);
        engine.trace_mut().wide(idx, "grid.index");
        Ok(idx as usize)
    }

    pub fn put(&mut self, engine: &mut RncEngine, key: &EncodedValue, payload: P) -> Result<Option<P>> {
        let i = self.index(engine, key)?;
        Ok(self.cells[i].replace(payload))
    }

    pub fn get(&self, engine: &mut RncEngine, key: &EncodedValue) -> Result<Option<&P>> {
        let i = self.index(engine, key)?;
        Ok(self.cells[i].as_ref())
    }
}

/// Grid whose entry for `encode(i)` is `table[i]`, stored as a plain byte.
pub fn grid_from_table(engine: &mut RncEngine, table: &[u8]) -> Result<RncGrid<u8>> {
    build_grid(engine, table, |_, b| Ok(b))
}

/// Grid whose entry for `encode(i)` is an encoding of `table[i]`, so lookups
/// hand back encoded bytes.
pub fn grid_from_table_encoded(
    engine: &mut RncEngine,
    table: &[u8],
) -> Result<RncGrid<EncodedValue>> {
    build_grid(engine, table, |e, b| e.encode(u64::from(b)))
}

fn build_grid<P>(
    engine: &mut RncEngine,
    table: &[u8],
    mut payload: impl FnMut(&mut RncEngine, u8) -> Result<P>,
) -> Result<RncGrid<P>> {
    let range = engine.set().range();
    if table.len() as u64 > range {
        return Err(RncError::OutOfRange {
            value: table.len() as i128,
            low: 0,
            high: i128::from(range),
        });
    }
    let mut grid = RncGrid::new(engine.set());
    for (i, &b) in table.iter().enumerate() {
        let key = engine.encode(i as u64)?;
        let p = payload(engine, b)?;
        grid.put(engine, &key, p)?;
    }
    Ok(grid)
}

/// Tree counterpart of [`grid_from_table_encoded`], built height-balanced.
pub fn tree_from_table_encoded(
    engine: &mut RncEngine,
    table: &[u8],
) -> Result<RncTree<EncodedValue>> {
    let range = engine.set().range();
    if table.len() as u64 > range {
        return Err(RncError::OutOfRange {
            value: table.len() as i128,
            low: 0,
            high: i128::from(range),
        });
    }
    let mut entries = Vec::with_capacity(table.len());
    for (i, &b) in table.iter().enumerate() {
        entries.push((engine.encode(i as u64)?, engine.encode(u64::from(b))?));
    }
    RncTree::from_sorted(engine, &entries)
}

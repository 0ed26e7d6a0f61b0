use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf {
        value: f64,
    },
    Split {
        var: usize,
        cut: u16,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    kind: NodeKind,
    parent: Option<usize>,
    depth: usize,
    alive: bool,
}

/// Binary regression tree stored in an arena; node 0 is always the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    slots: Vec<Slot>,
    free: Vec<usize>,
}

impl RegressionTree {
    pub fn stump(value: f64) -> Self {
        Self {
            slots: vec![Slot {
                kind: NodeKind::Leaf { value },
                parent: None,
                depth: 0,
                alive: true,
            }],
            free: Vec::new(),
        }
    }

    pub const ROOT: usize = 0;

    pub fn is_stump(&self) -> bool {
        matches!(self.slots[0].kind, NodeKind::Leaf { .. })
    }

    pub fn kind(&self, node: usize) -> &NodeKind {
        &self.slots[node].kind
    }

    pub fn depth(&self, node: usize) -> usize {
        self.slots[node].depth
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.slots[node].parent
    }

    pub fn arena_len(&self) -> usize {
        self.slots.len()
    }

    fn live(&self) -> impl Iterator<Item = (usize, &Slot)> {
        self.slots.iter().enumerate().filter(|(_, s)| s.alive)
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.live()
            .filter(|(_, s)| matches!(s.kind, NodeKind::Leaf { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().len()
    }

    /// Internal nodes whose two children are both leaves.
    pub fn nog_nodes(&self) -> Vec<usize> {
        self.live()
            .filter(|(_, s)| match s.kind {
                NodeKind::Split { left, right, .. } => self.is_leaf(left) && self.is_leaf(right),
                NodeKind::Leaf { .. } => false,
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        matches!(self.slots[node].kind, NodeKind::Leaf { .. })
    }

    pub fn max_depth(&self) -> usize {
        self.live().map(|(_, s)| s.depth).max().unwrap_or(0)
    }

    pub fn leaf_value(&self, node: usize) -> f64 {
        match self.slots[node].kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Split { .. } => panic!("node {node} is not a leaf"),
        }
    }

    pub fn set_leaf_value(&mut self, node: usize, v: f64) {
        match &mut self.slots[node].kind {
            NodeKind::Leaf { value } => *value = v,
            NodeKind::Split { .. } => panic!("node {node} is not a leaf"),
        }
    }

    /// Leaf reached by a row of pre-binned covariates.
    #[inline]
    pub fn leaf_for_bins(&self, bins: &[u16]) -> usize {
        let mut n = 0;
        loop {
            match self.slots[n].kind {
                NodeKind::Leaf { .. } => return n,
                NodeKind::Split {
                    var,
                    cut,
                    left,
                    right,
                    ..
                } => n = if bins[var] <= cut { left } else { right },
            }
        }
    }

    /// Tree output on raw covariates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut n = 0;
        loop {
            match self.slots[n].kind {
                NodeKind::Leaf { value } => return value,
                NodeKind::Split {
                    var,
                    threshold,
                    left,
                    right,
                    ..
                } => n = if x[var] <= threshold { left } else { right },
            }
        }
    }

    /// Inclusive range of cut indices for `var` still admissible at `node`
    /// given its ancestors' rules, or `None` if no cut remains.
    pub fn cut_range(&self, node: usize, var: usize, n_cuts: usize) -> Option<(u16, u16)> {
        if n_cuts == 0 {
            return None;
        }
        let mut lo: i64 = 0;
        let mut hi: i64 = n_cuts as i64 - 1;
        let mut child = node;
        while let Some(p) = self.slots[child].parent {
            if let NodeKind::Split {
                var: v, cut, left, ..
            } = self.slots[p].kind
            {
                if v == var {
                    if child == left {
                        hi = hi.min(cut as i64 - 1);
                    } else {
                        lo = lo.max(cut as i64 + 1);
                    }
                }
            }
            child = p;
        }
        (lo <= hi).then_some((lo as u16, hi as u16))
    }

    fn alloc(&mut self, slot: Slot) -> usize {
        match self.free.pop() {
            Some(i) => {
                self.slots[i] = slot;
                i
            }
            None => {
                self.slots.push(slot);
                self.slots.len() - 1
            }
        }
    }

    /// Turns a leaf into a split with two new leaves; returns `(left, right)`.
    pub fn split_leaf(
        &mut self,
        leaf: usize,
        var: usize,
        cut: u16,
        threshold: f64,
        left_value: f64,
        right_value: f64,
    ) -> (usize, usize) {
        assert!(self.is_leaf(leaf), "can only split a leaf");
        let depth = self.slots[leaf].depth + 1;
        let left = self.alloc(Slot {
            kind: NodeKind::Leaf { value: left_value },
            parent: Some(leaf),
            depth,
            alive: true,
        });
        let right = self.alloc(Slot {
            kind: NodeKind::Leaf { value: right_value },
            parent: Some(leaf),
            depth,
            alive: true,
        });
        self.slots[leaf].kind = NodeKind::Split {
            var,
            cut,
            threshold,
            left,
            right,
        };
        (left, right)
    }

    /// Collapses a split whose children are both leaves.
    pub fn prune(&mut self, node: usize, value: f64) {
        let (left, right) = match self.slots[node].kind {
            NodeKind::Split { left, right, .. } => (left, right),
            NodeKind::Leaf { .. } => panic!("cannot prune a leaf"),
        };
        assert!(self.is_leaf(left) && self.is_leaf(right), "children must be leaves");
        for c in [left, right] {
            self.slots[c].alive = false;
            self.free.push(c);
        }
        self.slots[node].kind = NodeKind::Leaf { value };
    }

    pub fn set_rule(&mut self, node: usize, new_var: usize, new_cut: u16, new_threshold: f64) {
        match &mut self.slots[node].kind {
            NodeKind::Split {
                var,
                cut,
                threshold,
                ..
            } => {
                *var = new_var;
                *cut = new_cut;
                *threshold = new_threshold;
            }
            NodeKind::Leaf { .. } => panic!("cannot change the rule of a leaf"),
        }
    }

    pub fn render(&self, names: &[String], scale: f64, out: &mut String) {
        self.render_node(0, names, scale, out);
    }

    fn render_node(&self, n: usize, names: &[String], scale: f64, out: &mut String) {
        let pad = "  ".repeat(self.slots[n].depth);
        match self.slots[n].kind {
            NodeKind::Leaf { value } => {
                let _ = writeln!(out, "{pad}leaf {:.6}", value * scale);
            }
            NodeKind::Split {
                var,
                threshold,
                left,
                right,
                ..
            } => {
                let name = names.get(var).map_or_else(|| format!("x{var}"), Clone::clone);
                let _ = writeln!(out, "{pad}{name} <= {threshold}");
                self.render_node(left, names, scale, out);
                let _ = writeln!(out, "{pad}{name} > {threshold}");
                self.render_node(right, names, scale, out);
            }
        }
    }
}

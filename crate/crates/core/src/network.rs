//! Discrete Bayesian networks: variable declarations, CPTs, and the DAG that ties them.

use std::fmt;

use log::debug;

use crate::error::ModelError;
use crate::table::JointTable;
use crate::TAU_NORM;

/// Index of a variable in its network's declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDecl {
    pub name: String,
    pub cardinality: usize,
    /// Optional state labels, index-aligned with states `0..cardinality`.
    pub states: Option<Vec<String>>,
}

/// Conditional probability table `P(child | parents)`.
///
/// Rows are parent configurations in mixed-radix order of `parents` (last parent fastest); each
/// row holds the `child_card` child-state probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: VarId,
    child_card: usize,
    parents: Vec<VarId>,
    parent_cards: Vec<usize>,
    table: Vec<f64>,
}

impl Cpt {
    pub fn new(
        child: VarId,
        child_card: usize,
        parents: Vec<VarId>,
        parent_cards: Vec<usize>,
        table: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if parents.len() != parent_cards.len() {
            return Err(ModelError::CptAxes {
                variable: child.to_string(),
            });
        }
        validate_cpt_table(&child.to_string(), child_card, &parent_cards, &table)?;
        Ok(Cpt {
            child,
            child_card,
            parents,
            parent_cards,
            table,
        })
    }

    /// Builds a CPT from nonnegative row weights, normalizing each row explicitly. Rows with
    /// zero total become uniform.
    pub(crate) fn from_weights(
        child: VarId,
        child_card: usize,
        parents: Vec<VarId>,
        parent_cards: Vec<usize>,
        mut table: Vec<f64>,
    ) -> Self {
        let mut largest_adjustment: f64 = 0.0;
        let mut uniform_rows = 0;
        for row in table.chunks_mut(child_card) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                largest_adjustment = largest_adjustment.max((1.0 - sum).abs());
                row.iter_mut().for_each(|p| *p /= sum);
            } else {
                uniform_rows += 1;
                row.iter_mut().for_each(|p| *p = 1.0 / child_card as f64);
            }
        }
        if uniform_rows > 0 {
            debug!("CPT {child}: {uniform_rows} zero-mass rows filled uniform");
        }
        if largest_adjustment > 1e-12 {
            debug!("CPT {child}: rows renormalized, largest adjustment {largest_adjustment:.3e}");
        }
        Cpt {
            child,
            child_card,
            parents,
            parent_cards,
            table,
        }
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    /// Flat row-major entries, child state fastest.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn num_rows(&self) -> usize {
        self.table.len() / self.child_card
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.table[row * self.child_card..(row + 1) * self.child_card]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks(self.child_card)
    }

    /// `P(child = child_state | parents = parent_states)`.
    pub fn prob(&self, parent_states: &[usize], child_state: usize) -> f64 {
        let row = parent_states
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&s, &c)| acc * c + s);
        self.table[row * self.child_card + child_state]
    }

    /// The CPT viewed as a factor over `parents ++ [child]`.
    pub fn as_factor(&self) -> JointTable {
        let mut scope = self.parents.clone();
        scope.push(self.child);
        let mut cards = self.parent_cards.clone();
        cards.push(self.child_card);
        JointTable::from_raw(scope, cards, self.table.clone())
    }

    fn same_axes(&self, other: &Cpt) -> bool {
        self.child == other.child
            && self.child_card == other.child_card
            && self.parents == other.parents
            && self.parent_cards == other.parent_cards
    }
}

fn validate_cpt_table(
    name: &str,
    child_card: usize,
    parent_cards: &[usize],
    table: &[f64],
) -> Result<(), ModelError> {
    let expected = parent_cards.iter().product::<usize>() * child_card;
    if table.len() != expected {
        return Err(ModelError::CptLength {
            variable: name.to_string(),
            expected,
            found: table.len(),
        });
    }
    if let Some((index, &value)) = table
        .iter()
        .enumerate()
        .find(|(_, p)| !(0.0..=1.0).contains(*p))
    {
        return Err(ModelError::CptEntry {
            variable: name.to_string(),
            index,
            value,
        });
    }
    for (row, entries) in table.chunks(child_card).enumerate() {
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > TAU_NORM {
            return Err(ModelError::CptRowNotNormalized {
                variable: name.to_string(),
                row,
                sum,
            });
        }
    }
    Ok(())
}

/// A validated Bayesian network: acyclic parent graph plus one normalized CPT per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    variables: Vec<VariableDecl>,
    parents: Vec<Vec<VarId>>,
    cpts: Vec<Cpt>,
    topo: Vec<VarId>,
}

impl NetworkSpec {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn variables(&self) -> &[VariableDecl] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &VariableDecl {
        &self.variables[id.0]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id.0].name
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id.0].cardinality
    }

    pub fn cards(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.cardinality).collect()
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id.0]
    }

    pub fn children(&self, id: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.ids().filter(move |&c| self.parents[c.0].contains(&id))
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    /// Deterministic topological order (lowest declared index first among ready variables).
    pub fn topological_order(&self) -> &[VarId] {
        &self.topo
    }

    /// Position of each variable in [`NetworkSpec::topological_order`].
    pub fn topological_rank(&self) -> Vec<usize> {
        let mut rank = vec![0; self.len()];
        for (pos, v) in self.topo.iter().enumerate() {
            rank[v.0] = pos;
        }
        rank
    }

    /// Number of cells in the full joint table (saturating).
    pub fn joint_cells(&self) -> usize {
        self.variables
            .iter()
            .fold(1usize, |acc, v| acc.saturating_mul(v.cardinality))
    }

    /// True when both networks declare the same variables and parent lists.
    pub fn same_structure(&self, other: &NetworkSpec) -> bool {
        self.variables == other.variables && self.parents == other.parents
    }

    /// Same DAG with a replacement CPT set; every CPT must keep its axes.
    pub fn with_cpts(&self, cpts: Vec<Cpt>) -> Result<NetworkSpec, ModelError> {
        if cpts.len() != self.cpts.len() {
            return Err(ModelError::CptCount {
                variables: self.len(),
                cpts: cpts.len(),
            });
        }
        for (old, new) in self.cpts.iter().zip(&cpts) {
            let name = self.name(old.child);
            if !old.same_axes(new) {
                return Err(ModelError::CptAxes {
                    variable: name.to_string(),
                });
            }
            validate_cpt_table(name, new.child_card, &new.parent_cards, &new.table)?;
        }
        Ok(NetworkSpec {
            variables: self.variables.clone(),
            parents: self.parents.clone(),
            cpts,
            topo: self.topo.clone(),
        })
    }

    /// Swaps in a solver-produced CPT with matching axes.
    pub(crate) fn set_cpt(&mut self, cpt: Cpt) {
        let slot = &mut self.cpts[cpt.child.0];
        debug_assert!(slot.same_axes(&cpt));
        *slot = cpt;
    }
}

#[derive(Debug, Clone)]
struct PendingNode {
    decl: VariableDecl,
    parents: Vec<String>,
    table: Vec<f64>,
}

/// Assembles a [`NetworkSpec`] from named nodes; parents may be declared before or after use.
#[derive(Debug, Clone, Default)]
pub struct NetworkBuilder {
    nodes: Vec<PendingNode>,
}

impl NetworkBuilder {
    pub fn node(mut self, name: &str, cardinality: usize, parents: &[&str], cpt: Vec<f64>) -> Self {
        self.nodes.push(PendingNode {
            decl: VariableDecl {
                name: name.to_string(),
                cardinality,
                states: None,
            },
            parents: parents.iter().map(|p| p.to_string()).collect(),
            table: cpt,
        });
        self
    }

    pub fn push(&mut self, decl: VariableDecl, parents: Vec<String>, cpt: Vec<f64>) {
        self.nodes.push(PendingNode {
            decl,
            parents,
            table: cpt,
        });
    }

    pub fn build(self) -> Result<NetworkSpec, ModelError> {
        let nodes = self.nodes;
        for (i, node) in nodes.iter().enumerate() {
            let decl = &node.decl;
            if nodes[..i].iter().any(|n| n.decl.name == decl.name) {
                return Err(ModelError::DuplicateVariable(decl.name.clone()));
            }
            if decl.cardinality < 2 {
                return Err(ModelError::BadCardinality {
                    name: decl.name.clone(),
                    cardinality: decl.cardinality,
                });
            }
            if let Some(states) = &decl.states {
                if states.len() != decl.cardinality {
                    return Err(ModelError::StateLabels {
                        name: decl.name.clone(),
                        labels: states.len(),
                        cardinality: decl.cardinality,
                    });
                }
            }
        }

        let lookup = |name: &str| nodes.iter().position(|n| n.decl.name == name).map(VarId);
        let mut parents = Vec::with_capacity(nodes.len());
        for node in &nodes {
            let mut ids: Vec<VarId> = Vec::with_capacity(node.parents.len());
            for parent in &node.parents {
                let id = lookup(parent).ok_or_else(|| ModelError::UnknownParent {
                    child: node.decl.name.clone(),
                    parent: parent.clone(),
                })?;
                if ids.contains(&id) {
                    return Err(ModelError::DuplicateParent {
                        child: node.decl.name.clone(),
                        parent: parent.clone(),
                    });
                }
                ids.push(id);
            }
            parents.push(ids);
        }

        let names: Vec<&str> = nodes.iter().map(|n| n.decl.name.as_str()).collect();
        let topo = topological_sort(&parents).map_err(|cycle| {
            ModelError::Cycle(cycle.iter().map(|v| names[v.0].to_string()).collect())
        })?;

        let mut cpts = Vec::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            let parent_cards: Vec<usize> = parents[i]
                .iter()
                .map(|p| nodes[p.0].decl.cardinality)
                .collect();
            validate_cpt_table(
                &node.decl.name,
                node.decl.cardinality,
                &parent_cards,
                &node.table,
            )?;
            cpts.push(Cpt {
                child: VarId(i),
                child_card: node.decl.cardinality,
                parents: parents[i].clone(),
                parent_cards,
                table: node.table.clone(),
            });
        }

        Ok(NetworkSpec {
            variables: nodes.into_iter().map(|n| n.decl).collect(),
            parents,
            cpts,
            topo,
        })
    }
}

/// Kahn's algorithm; on failure returns one cycle as `[v0, v1, .., v0]` following edge
/// direction parent -> child.
fn topological_sort(parents: &[Vec<VarId>]) -> Result<Vec<VarId>, Vec<VarId>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let Some(next) = (0..n).find(|&v| !done[v] && indegree[v] == 0) else {
            return Err(find_cycle(parents, &done));
        };
        done[next] = true;
        order.push(VarId(next));
        for (child, ps) in parents.iter().enumerate() {
            if ps.contains(&VarId(next)) {
                indegree[child] -= 1;
            }
        }
    }
    Ok(order)
}

fn find_cycle(parents: &[Vec<VarId>], done: &[bool]) -> Vec<VarId> {
    // Walk parent links from any unresolved node; every unresolved node has an unresolved
    // parent, so the walk must revisit a node.
    let start = (0..parents.len()).find(|&v| !done[v]).unwrap_or(0);
    let mut path = vec![start];
    loop {
        let current = *path.last().unwrap();
        let next = parents[current]
            .iter()
            .map(|p| p.0)
            .find(|&p| !done[p])
            .unwrap_or(start);
        if let Some(pos) = path.iter().position(|&v| v == next) {
            let mut cycle: Vec<VarId> = path[pos..].iter().map(|&v| VarId(v)).collect();
            cycle.reverse();
            cycle.insert(0, *cycle.last().unwrap());
            return cycle;
        }
        path.push(next);
    }
}

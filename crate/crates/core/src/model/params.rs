use rand::Rng;

use super::{Hyper, Variant};

/// A learnable array of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    Entity,
    Relation,
    RelationOffset,
    Time,
    TimeOffset,
    /// Center attention map.
    Attention,
    /// First inner layer of the offset DeepSets.
    DeepSetsIn,
    /// Second inner layer of the offset DeepSets.
    DeepSetsHidden,
    /// Outer map of the offset DeepSets.
    DeepSetsOut,
}

impl Block {
    /// Checkpoint order.
    pub const ALL: [Block; 9] = [
        Block::Entity,
        Block::Relation,
        Block::RelationOffset,
        Block::Time,
        Block::TimeOffset,
        Block::Attention,
        Block::DeepSetsIn,
        Block::DeepSetsHidden,
        Block::DeepSetsOut,
    ];

    pub fn is_matrix(self) -> bool {
        matches!(
            self,
            Block::Attention | Block::DeepSetsIn | Block::DeepSetsHidden | Block::DeepSetsOut
        )
    }

    pub fn is_offset(self) -> bool {
        matches!(self, Block::RelationOffset | Block::TimeOffset)
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::Entity => "entity",
            Block::Relation => "relation",
            Block::RelationOffset => "relation_offset",
            Block::Time => "time",
            Block::TimeOffset => "time_offset",
            Block::Attention => "attention",
            Block::DeepSetsIn => "deepsets_in",
            Block::DeepSetsHidden => "deepsets_hidden",
            Block::DeepSetsOut => "deepsets_out",
        }
    }
}

/// One row of a block: an embedding vector, or a whole `d × d` matrix
/// (row 0) for the intersection weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamSlot {
    pub block: Block,
    pub row: usize,
}

impl ParamSlot {
    pub fn new(block: Block, row: usize) -> Self {
        ParamSlot { block, row }
    }

    pub fn matrix(block: Block) -> Self {
        debug_assert!(block.is_matrix());
        ParamSlot { block, row: 0 }
    }
}

/// Every learnable array, stored row-major in 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    pub dim: usize,
    pub num_entities: usize,
    /// Model relations, inverses included.
    pub num_relations: usize,
    pub num_times: usize,
    pub variant: Variant,
    pub hyper: Hyper,
    pub entity: Vec<f64>,
    pub relation: Vec<f64>,
    pub relation_offset: Vec<f64>,
    pub time: Vec<f64>,
    pub time_offset: Vec<f64>,
    pub attention: Vec<f64>,
    pub deepsets_in: Vec<f64>,
    pub deepsets_hidden: Vec<f64>,
    pub deepsets_out: Vec<f64>,
}

impl ParameterStore {
    pub fn zeros(
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        num_times: usize,
        variant: Variant,
        hyper: Hyper,
    ) -> Self {
        let mut store = ParameterStore {
            dim,
            num_entities,
            num_relations,
            num_times,
            variant,
            hyper,
            entity: Vec::new(),
            relation: Vec::new(),
            relation_offset: Vec::new(),
            time: Vec::new(),
            time_offset: Vec::new(),
            attention: Vec::new(),
            deepsets_in: Vec::new(),
            deepsets_hidden: Vec::new(),
            deepsets_out: Vec::new(),
        };
        for block in Block::ALL {
            let len = store.block_len(block);
            *store.block_mut(block) = vec![0.0; len];
        }
        store
    }

    /// Centers uniform in `[-γ/d, γ/d]`, offsets uniform in `[0, γ/d]`,
    /// intersection matrices Xavier-uniform.
    pub fn initialized(
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        num_times: usize,
        variant: Variant,
        hyper: Hyper,
        rng: &mut impl Rng,
    ) -> Self {
        let mut store = Self::zeros(dim, num_entities, num_relations, num_times, variant, hyper);
        let scale = hyper.gamma / dim as f64;
        let xavier = (6.0 / (2.0 * dim as f64)).sqrt();
        for block in Block::ALL {
            let (lo, hi) = if block.is_matrix() {
                (-xavier, xavier)
            } else if block.is_offset() {
                (0.0, scale)
            } else {
                (-scale, scale)
            };
            for v in store.block_mut(block).iter_mut() {
                *v = rng.gen_range(lo..=hi);
            }
        }
        store
    }

    /// Number of rows of `block`.
    pub fn rows(&self, block: Block) -> usize {
        match block {
            Block::Entity => self.num_entities,
            Block::Relation | Block::RelationOffset => self.num_relations,
            Block::Time | Block::TimeOffset => self.num_times,
            _ => 1,
        }
    }

    /// Scalars per row of `block`.
    pub fn row_len(&self, block: Block) -> usize {
        if block.is_matrix() {
            self.dim * self.dim
        } else {
            self.dim
        }
    }

    pub fn block_len(&self, block: Block) -> usize {
        self.rows(block) * self.row_len(block)
    }

    pub fn block(&self, block: Block) -> &Vec<f64> {
        match block {
            Block::Entity => &self.entity,
            Block::Relation => &self.relation,
            Block::RelationOffset => &self.relation_offset,
            Block::Time => &self.time,
            Block::TimeOffset => &self.time_offset,
            Block::Attention => &self.attention,
            Block::DeepSetsIn => &self.deepsets_in,
            Block::DeepSetsHidden => &self.deepsets_hidden,
            Block::DeepSetsOut => &self.deepsets_out,
        }
    }

    pub fn block_mut(&mut self, block: Block) -> &mut Vec<f64> {
        match block {
            Block::Entity => &mut self.entity,
            Block::Relation => &mut self.relation,
            Block::RelationOffset => &mut self.relation_offset,
            Block::Time => &mut self.time,
            Block::TimeOffset => &mut self.time_offset,
            Block::Attention => &mut self.attention,
            Block::DeepSetsIn => &mut self.deepsets_in,
            Block::DeepSetsHidden => &mut self.deepsets_hidden,
            Block::DeepSetsOut => &mut self.deepsets_out,
        }
    }

    pub fn slot(&self, slot: ParamSlot) -> &[f64] {
        let n = self.row_len(slot.block);
        &self.block(slot.block)[slot.row * n..(slot.row + 1) * n]
    }

    pub fn slot_mut(&mut self, slot: ParamSlot) -> &mut [f64] {
        let n = self.row_len(slot.block);
        &mut self.block_mut(slot.block)[slot.row * n..(slot.row + 1) * n]
    }

    pub fn entity_row(&self, e: usize) -> &[f64] {
        self.slot(ParamSlot::new(Block::Entity, e))
    }

    /// Total learnable scalars.
    pub fn param_count(&self) -> usize {
        Block::ALL.iter().map(|&b| self.block(b).len()).sum()
    }

    /// `d·(|E| + 2|T| + 2|R|) + 4d²`.
    pub fn expected_param_count(dim: usize, entities: usize, relations: usize, times: usize) -> usize {
        dim * (entities + 2 * times + 2 * relations) + 4 * dim * dim
    }

    /// Projects both offset blocks onto the nonnegative orthant.
    pub fn clamp_offsets(&mut self) {
        for block in [Block::RelationOffset, Block::TimeOffset] {
            for v in self.block_mut(block).iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }

    /// Smoothness penalty over consecutive time embeddings:
    /// `1/(|T|-1) Σ ‖t_{i+1} − t_i‖²`, zero when `|T| < 2`.
    pub fn time_smoothness(&self) -> f64 {
        if self.num_times < 2 {
            return 0.0;
        }
        let d = self.dim;
        let total: f64 = (0..self.num_times - 1)
            .map(|i| {
                let a = &self.time[i * d..(i + 1) * d];
                let b = &self.time[(i + 1) * d..(i + 2) * d];
                a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>()
            })
            .sum();
        total / (self.num_times - 1) as f64
    }
}

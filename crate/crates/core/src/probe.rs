/// Work counters threaded through queries and updates.
///
/// Counts stand in for wall-clock time in the scaling checks; every field is a
/// number of elementary visits of the named kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Probe {
    pub quad_nodes: u64,
    pub time_nodes: u64,
    pub catalog_calls: u64,
    pub block_nodes: u64,
    pub gveb_levels: u64,
    pub rebuild_work: u64,
    pub reported: u64,
}

impl Probe {
    /// Sum of all visit counters, output size excluded.
    pub fn visited(&self) -> u64 {
        self.quad_nodes
            + self.time_nodes
            + self.catalog_calls
            + self.block_nodes
            + self.gveb_levels
            + self.rebuild_work
    }

    pub fn absorb(&mut self, other: &Probe) {
        self.quad_nodes += other.quad_nodes;
        self.time_nodes += other.time_nodes;
        self.catalog_calls += other.catalog_calls;
        self.block_nodes += other.block_nodes;
        self.gveb_levels += other.gveb_levels;
        self.rebuild_work += other.rebuild_work;
        self.reported += other.reported;
    }
}

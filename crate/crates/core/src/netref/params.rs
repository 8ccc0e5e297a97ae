/// Block wiring of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockVariant {
    Dense,
    Competitive,
}

/// Encoder-decoder with one block per stage and constant channel width.
///
/// Decoder skips are concatenated with the unpooled map in the dense
/// variant and combined by maxout in the competitive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchConfig {
    pub in_channels: usize,
    pub width: usize,
    pub kernel: usize,
    /// Kernel of the third unit in each block.
    pub last_kernel: usize,
    pub encoders: usize,
    pub decoders: usize,
    pub classes: usize,
    pub conv_bias: bool,
    pub variant: BlockVariant,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            in_channels: 7,
            width: 64,
            kernel: 5,
            last_kernel: 1,
            encoders: 4,
            decoders: 4,
            classes: 79,
            conv_bias: false,
            variant: BlockVariant::Competitive,
        }
    }
}

fn conv(k: usize, c_in: usize, c_out: usize, bias: bool) -> usize {
    k * k * c_in * c_out + if bias { c_out } else { 0 }
}

/// PReLU or BN in front, conv, BN behind. Every BN contributes a scale and
/// a shift per channel; running statistics are not learnable.
fn unit(cfg: &ArchConfig, k: usize, c_in: usize, c_out: usize, bn_pre: bool) -> usize {
    let pre = if bn_pre { 2 * c_in } else { c_in };
    pre + conv(k, c_in, c_out, cfg.conv_bias) + 2 * c_out
}

fn block(cfg: &ArchConfig, c_in: usize, first: bool) -> usize {
    let (k, kl, c) = (cfg.kernel, cfg.last_kernel, cfg.width);
    match cfg.variant {
        BlockVariant::Dense => {
            unit(cfg, k, c_in, c, false) + unit(cfg, k, c_in + c, c, false) + unit(cfg, kl, c_in + 2 * c, c, false)
        }
        BlockVariant::Competitive => unit(cfg, k, c_in, c, first) + unit(cfg, k, c, c, false) + unit(cfg, kl, c, c, false),
    }
}

/// Learnable parameters: every block, plus a 1×1 classifier with bias.
pub fn count_params(cfg: &ArchConfig) -> usize {
    let c = cfg.width;
    let mut n = block(cfg, cfg.in_channels, true);
    // further encoders and the bottleneck
    n += cfg.encoders * block(cfg, c, false);
    let dec_in = match cfg.variant {
        BlockVariant::Dense => 2 * c,
        BlockVariant::Competitive => c,
    };
    n += cfg.decoders * block(cfg, dec_in, false);
    n + conv(1, c, cfg.classes, true)
}

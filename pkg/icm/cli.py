#!/usr/bin/python
import os
import sys
import logging
import argparse
from . import const
from .version import get_version
from .errors import IcmError, UsageError, DimensionError
from .params import Param, PathParam, BoolParam, IntParam, FloatParam, ListParam
from .config import RunConfig
from .serializers import CSVSerializer, CheckpointSerializer
from .tensor import read_image, write_image, read_tensor, write_tensor, concat_width
from .masking import sample_mask, apply_mask, mask_to_image, describe_ratio
from .matching import (FeatureGrid, FlowField, patch_descriptors, cost_volume,
                       argmax_flow, match_pyramids, flow_accuracy, epe_histogram)
from .warpagg import warp_nearest, aggregate_residual, anneal_weights, AnnealConfig
from .diffusion import linear_schedule, write_schedule_csv
from .toynets import (AffineDenoiser, TargetPullDenoiser, toy_dataset, sgd_train,
                      dataset_loss)
from .inference import (InferenceConfig, DenoiserPair, OraclePair, with_reconstruction_prior,
                        feature_conditioned_pair, progressive_inference)
from .synth import gen_pairs
from .metrics import EmbeddingSet, sim_stats, self_sim_stats, write_stats_csv, STATS_HEADER
from .bench import bench_cost_volume, BENCH_HEADER

logger = logging.getLogger(__name__)

def schedule_params():
    return [
        IntParam('schedule_steps', const.DEFAULT_STEPS, min=1,
                 help='number of diffusion steps T'),
        FloatParam('beta_start', const.DEFAULT_BETA_START, min=0, max=1, open_min=True,
                   help='first beta of the linear schedule'),
        FloatParam('beta_end', const.DEFAULT_BETA_END, min=0, max=1, open_min=True,
                   help='last beta of the linear schedule'),
        PathParam('schedule_out', help='write the schedule as CSV (t, beta, alpha, alpha_bar)'),
    ]

def schedule_from(cfg):
    sched = linear_schedule(cfg['schedule_steps'], cfg['beta_start'], cfg['beta_end'])
    if cfg.get('schedule_out'):
        write_schedule_csv(cfg['schedule_out'], sched)
    return sched

def write_csv(path, header, rows):
    """Writes a CSV file, or prints it when path is None."""
    if path:
        CSVSerializer(path).serialize_table(header, rows)
        return
    print(','.join(header))
    for row in rows:
        print(','.join(row))

# "gen-pairs" command
def gen_pairs_params():
    return [
        PathParam('out', required=True, help='output directory'),
        IntParam('count', const.DEFAULT_PAIR_COUNT, min=1, help='number of view pairs'),
        IntParam('seed', 0, min=0, help='random seed'),
        IntParam('size', const.DEFAULT_IMAGE_SIZE, min=4, help='image side in pixels'),
        FloatParam('yaw_range', const.DEFAULT_YAW_RANGE, min=0, max=90,
                   help='absolute yaw range of view A in degrees'),
        FloatParam('max_yaw_delta', const.DEFAULT_MAX_YAW_DELTA, min=0, max=45,
                   help='largest yaw difference between the views in degrees'),
        IntParam('threads', 1, min=1, help='worker threads'),
    ]

def cmd_gen_pairs(cfg):
    dataset = gen_pairs(cfg['count'], cfg['seed'], cfg['out'],
                        size=cfg['size'],
                        yaw_range=cfg['yaw_range'],
                        max_yaw_delta=cfg['max_yaw_delta'],
                        threads=cfg['threads'])
    print(dataset.manifest_path)

# "match" command
def match_params():
    return [
        PathParam('src', required=True, help='source image (the layout to fill)'),
        PathParam('tgt', required=True, help='target image (the profile to match into)'),
        PathParam('out', required=True, help='output directory'),
        IntParam('levels', 2, min=1, help='pyramid levels'),
        IntParam('patch', 5, min=1, help='descriptor patch size (odd)'),
        IntParam('window', min=0, help='search window radius; global search if unset'),
        IntParam('threads', 1, min=1, help='worker threads'),
        PathParam('gt', help='ground truth flow tensor'),
        PathParam('vis', help='visibility tensor for the ground truth'),
    ]

def cmd_match(cfg):
    src = read_image(cfg['src'])
    tgt = read_image(cfg['tgt'])
    if src.shape != tgt.shape:
        raise UsageError(f"image dims differ: {src.shape} vs {tgt.shape}")
    if cfg['patch'] % 2 == 0:
        raise UsageError(f"--patch must be odd, got {cfg['patch']}")
    src_pyr = patch_descriptors(src, cfg['levels'], cfg['patch'])
    tgt_pyr = patch_descriptors(tgt, cfg['levels'], cfg['patch'])

    out = cfg['out']
    os.makedirs(out, exist_ok=True)
    flows = []
    for level, (s, t) in enumerate(zip(src_pyr, tgt_pyr)):
        cost = cost_volume(s, t, window=cfg.get('window'), threads=cfg['threads'])
        flow = argmax_flow(cost)
        flows.append(flow)
        write_tensor(os.path.join(out, f'flow_l{level}.icmt'), flow.to_tensor())
        if level == 0:
            rows = [[str(r), str(c), str(dx), str(dy), f'{score:.6f}']
                    for r, c, dx, dy, score in flow.rows(cost)]
            write_csv(os.path.join(out, 'flow_l0.csv'), ['row', 'col', 'dx', 'dy', 'score'], rows)
        print(f"level {level}: {s.height}x{s.width}, zero flow {100*flow.zero_fraction():.1f}%")

    if cfg.get('gt'):
        visibility = None
        if cfg.get('vis'):
            visibility = read_tensor(cfg['vis'])[..., 0] > 0.5
        gt = FlowField.from_tensor(read_tensor(cfg['gt']), visibility)
        if gt.shape != flows[0].shape:
            raise UsageError(f"ground truth {gt.shape} does not match images {flows[0].shape}")
        accuracy = flow_accuracy(flows[0], gt, visibility)
        rows = [[label, str(count)] for label, count in epe_histogram(flows[0], gt, visibility)]
        write_csv(os.path.join(out, 'epe_histogram.csv'), ['error', 'count'], rows)
        print(f"accuracy (<= 1px): {100*accuracy:.1f}%")

# "infer" command
def infer_params():
    return [
        PathParam('style', required=True, help='style image (the pass input)'),
        PathParam('out', required=True, help='output image'),
        Param('denoiser', 'target-pull', choices=('oracle', 'target-pull', 'affine'),
              help='toy denoiser'),
        PathParam('target', help='target image for target-pull and the distance trace'),
        PathParam('checkpoint', help='affine denoiser checkpoint prefix'),
        PathParam('trace', help='trace CSV (default: next to the output image)'),
        IntParam('iterations', const.DEFAULT_ITERATIONS, min=1, help='progressive passes'),
        FloatParam('strength', const.DEFAULT_STRENGTH, min=0, max=1, open_min=True,
                   help='denoising strength of every pass'),
        ListParam('strengths', min=0, max=1, open_min=True,
                  help='per-pass strengths, overriding --strength'),
        IntParam('sampler_steps', const.DEFAULT_SAMPLER_STEPS, min=1,
                 help='largest number of sampler steps per pass'),
        FloatParam('guidance', const.DEFAULT_GUIDANCE, help='classifier-free guidance scale'),
        FloatParam('eta', 0.0, min=0, help='ancestral sampling noise (0 is deterministic DDIM)'),
        FloatParam('keep_ratio', min=0, max=1, help='inpaint a random fraction of kept pixels'),
        PathParam('profile', help='profile image whose matched features condition the sampler'),
        IntParam('levels', 2, min=1, help='pyramid levels of the feature transfer'),
        IntParam('patch', 5, min=1, help='descriptor patch size (odd)'),
        IntParam('window', min=0, help='search window radius; global search if unset'),
        FloatParam('alpha', const.DEFAULT_ALPHA, min=0, help='annealing rate'),
        FloatParam('beta', const.DEFAULT_BETA, min=0, help='base weight'),
        IntParam('seed', 0, min=0, help='random seed'),
    ]+schedule_params()

def make_denoisers(cfg, style, target, sched):
    kind = cfg['denoiser']
    if kind == 'oracle':
        return OraclePair(cfg['seed'])
    if kind == 'target-pull':
        if target is None:
            raise UsageError("--denoiser target-pull needs --target")
        return with_reconstruction_prior(TargetPullDenoiser(target, sched), sched)
    if not cfg.get('checkpoint'):
        raise UsageError("--denoiser affine needs --checkpoint")
    affine = CheckpointSerializer(cfg['checkpoint']).deserialize_denoiser()
    if affine.shape != style.shape:
        raise UsageError(f"checkpoint shape {affine.shape} does not match style {style.shape}")
    return DenoiserPair(affine)

def condition_on_profile(cfg, style, denoisers):
    profile = read_image(cfg['profile'])
    if profile.shape != style.shape:
        raise UsageError(f"profile {profile.shape} does not match style {style.shape}")
    if cfg['patch'] % 2 == 0:
        raise UsageError(f"--patch must be odd, got {cfg['patch']}")
    lighting = patch_descriptors(style, cfg['levels'], cfg['patch'])
    features = patch_descriptors(profile, cfg['levels'], cfg['patch'])
    flows = match_pyramids(lighting, features, window=cfg.get('window'))
    weights = anneal_weights(AnnealConfig(cfg['levels'], cfg['alpha'], cfg['beta']))
    pair, _ = feature_conditioned_pair(lighting, features, flows, weights, denoisers)
    return pair

def cmd_infer(cfg):
    strengths = cfg.get('strengths') or [cfg['strength']]*cfg['iterations']
    if len(strengths) != cfg['iterations']:
        raise UsageError(f"--strengths has {len(strengths)} values"
                         f" for {cfg['iterations']} iterations")
    style = read_image(cfg['style'])
    target = None
    if cfg.get('target'):
        target = read_image(cfg['target'])
        if target.shape != style.shape:
            raise UsageError(f"target {target.shape} does not match style {style.shape}")
    sched = schedule_from(cfg)

    keep_mask = None
    if cfg.get('keep_ratio') is not None:
        keep_mask = sample_mask(style.shape[0], style.shape[1], cfg['keep_ratio'], cfg['seed'])
        logger.info("inpainting: %s", describe_ratio(cfg['keep_ratio']))
    config = InferenceConfig(iterations=cfg['iterations'],
                             strengths=strengths,
                             sampler_steps=cfg['sampler_steps'],
                             guidance_scale=cfg['guidance'],
                             keep_mask=keep_mask,
                             seed=cfg['seed'],
                             eta=cfg['eta'])
    denoisers = make_denoisers(cfg, style, target, sched)
    if cfg.get('profile'):
        denoisers = condition_on_profile(cfg, style, denoisers)
    result, trace = progressive_inference(style, denoisers, config, sched, target=target)

    write_image(cfg['out'], result)
    trace_path = cfg.get('trace') or os.path.splitext(cfg['out'])[0]+'_trace.csv'
    rows = [[str(i), str(step), str(t), f'{d:.8f}'] for i, step, t, d in trace.rows()]
    write_csv(trace_path, ['iteration', 'step', 't', 'distance_to_target'], rows)
    for record in trace:
        line = f"iteration {record.iteration}: t_start {record.start_step}"
        if target is not None:
            line += f", distance to target {record.end_distance:.6f}"
        print(line)

# "bench" command
def bench_params():
    return [
        ListParam('sizes', item_type=int, default=[32], min=1, help='grid sides to time'),
        IntParam('channels', 16, min=1, help='descriptor channels'),
        IntParam('window', min=0, help='search window radius; full volume if unset'),
        IntParam('threads', 4, min=1, help='worker threads of the parallel run'),
        IntParam('repeats', 1, min=1, help='runs per measurement (best is reported)'),
        IntParam('seed', 0, min=0, help='random seed'),
        PathParam('out', help='CSV output (default: stdout)'),
    ]

def cmd_bench(cfg):
    rows = []
    for size in cfg['sizes']:
        for result in bench_cost_volume(size, cfg['channels'], cfg.get('window'),
                                        cfg['threads'], cfg['seed'], cfg['repeats']):
            rows.append(result.to_row())
    write_csv(cfg.get('out'), BENCH_HEADER, rows)
    if cfg.get('out'):
        print(cfg['out'])

# "mask" command
def mask_params():
    return [
        PathParam('image', required=True, help='view to mask'),
        PathParam('out', required=True, help='output condition image'),
        PathParam('reference', help='reference view placed to the right'),
        PathParam('mask_out', help='mask image output'),
        FloatParam('keep_ratio', 0.5, min=0, max=1, help='fraction of pixels kept'),
        FloatParam('fill', 0.0, help='value of dropped pixels'),
        IntParam('seed', 0, min=0, help='random seed'),
    ]

def cmd_mask(cfg):
    image = read_image(cfg['image'])
    h, w = image.shape[:2]
    mask = sample_mask(h, w, cfg['keep_ratio'], cfg['seed'])
    result = apply_mask(image, mask, cfg['fill'])
    if cfg.get('reference'):
        reference = read_image(cfg['reference'])
        if reference.shape != image.shape:
            raise UsageError(f"reference {reference.shape} does not match image {image.shape}")
        result = concat_width(result, reference)
    write_image(cfg['out'], result)
    if cfg.get('mask_out'):
        write_image(cfg['mask_out'], mask_to_image(mask))
    print(f"{describe_ratio(cfg['keep_ratio'])}: {mask.keep_count} of {h*w} pixels kept")

# "warp" command
def warp_params():
    return [
        PathParam('features', required=True, help='features or image to warp'),
        PathParam('flow', required=True, help='flow tensor [H, W, 2]'),
        PathParam('out', required=True, help='output tensor or image'),
        PathParam('lighting', help='lighting features to aggregate into'),
        FloatParam('alpha', const.DEFAULT_ALPHA, min=0, help='annealing rate'),
        FloatParam('beta', const.DEFAULT_BETA, min=0, help='base weight'),
    ]

def cmd_warp(cfg):
    features = FeatureGrid(read_image(cfg['features']))
    flow = FlowField.from_tensor(read_tensor(cfg['flow']))
    if features.shape[:2] != flow.shape:
        raise UsageError(f"features {features.shape[:2]} and flow {flow.shape} differ")
    warped = warp_nearest(features, flow)
    result = warped.data
    if cfg.get('lighting'):
        lighting = FeatureGrid(read_image(cfg['lighting']))
        weights = anneal_weights(AnnealConfig(1, cfg['alpha'], cfg['beta']))
        result = aggregate_residual([lighting], [warped], weights)[0].data
    write_image(cfg['out'], result)
    print(cfg['out'])

# "train-toy" command
def train_toy_params():
    return [
        PathParam('out', required=True, help='checkpoint path prefix'),
        IntParam('count', 16, min=1, help='training samples'),
        IntParam('size', 2, min=1, help='latent side'),
        IntParam('channels', 1, min=1, help='latent channels'),
        IntParam('steps', 200, min=1, help='gradient steps'),
        FloatParam('lr', 0.1, min=0, help='learning rate'),
        FloatParam('dropout', const.DEFAULT_EMBEDDING_DROPOUT, min=0, max=1,
                   help='condition embedding dropout'),
        IntParam('seed', 0, min=0, help='random seed'),
    ]+schedule_params()

def cmd_train_toy(cfg):
    sched = schedule_from(cfg)
    shape = (cfg['size'], cfg['size'], cfg['channels'])
    dataset = toy_dataset(cfg['count'], shape, cfg['seed'], sched, dropout=cfg['dropout'])
    initial = AffineDenoiser.zeros(shape)
    trained = sgd_train(initial, dataset, cfg['lr'], cfg['steps'], cfg['seed'], sched)
    meta = {'lr': repr(cfg['lr']), 'steps': cfg['steps'], 'seed': cfg['seed']}
    CheckpointSerializer(cfg['out']).serialize_denoiser(trained, meta)
    print(f"loss {dataset_loss(initial, dataset, sched):.6f}"
          f" -> {dataset_loss(trained, dataset, sched):.6f}")

# "metrics" command
def metrics_params():
    return [
        PathParam('results', required=True, help='result embeddings [N, D]'),
        PathParam('profiles', required=True, help='profile embeddings [M, D]'),
        Param('method', 'Ours', help='row label'),
        BoolParam('upper_bound', False, help='add the profile self-similarity row'),
        PathParam('out', help='CSV output (default: stdout)'),
    ]

def cmd_metrics(cfg):
    results = EmbeddingSet.from_file(cfg['results'], cfg['method'])
    profiles = EmbeddingSet.from_file(cfg['profiles'], 'profiles')
    stats = [sim_stats(results, profiles)]
    if cfg['upper_bound']:
        stats.append(self_sim_stats(profiles))
    if cfg.get('out'):
        write_stats_csv(cfg['out'], stats)
        print(cfg['out'])
    else:
        write_csv(None, STATS_HEADER, [s.to_row() for s in stats])

commands = {
    'gen-pairs': (gen_pairs_params, cmd_gen_pairs, 'render synthetic view pairs'),
    'match': (match_params, cmd_match, 'match two images with cost volumes'),
    'infer': (infer_params, cmd_infer, 'run progressive dual-condition inference'),
    'bench': (bench_params, cmd_bench, 'time the cost volume kernel'),
    'mask': (mask_params, cmd_mask, 'build a masked dual condition'),
    'warp': (warp_params, cmd_warp, 'warp features along a flow'),
    'train-toy': (train_toy_params, cmd_train_toy, 'train the affine toy denoiser'),
    'metrics': (metrics_params, cmd_metrics, 'cosine similarity statistics'),
}

def build_parser():
    parser = argparse.ArgumentParser(
        prog='icm',
        description='In-context matching and dual-condition diffusion toolkit'
    )
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log progress (-vv for debug output)')
    parser.add_argument('--version', action='version', version=get_version())
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')

    for name, (params, _, help) in commands.items():
        subparser = subparsers.add_parser(name, help=help)
        subparser.add_argument('--config', help='key = value file with parameter defaults')
        for param in params():
            subparser.add_argument(param.flag(),
                                   dest=param.name,
                                   help=param.help or None,
                                   metavar=param.type.__name__.upper())
    return parser, subparsers

def setup_logging(verbosity):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')

def run(argv=None):
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2

    setup_logging(args.verbose)
    params, func, _ = commands[args.command]
    subparser = subparsers.choices[args.command]
    cfg = RunConfig(params())
    try:
        if args.config:
            cfg.load_file(args.config)
        cfg.update_from_args(args)
        cfg.validate()
        func(cfg)
    except (UsageError, DimensionError) as e:
        subparser.print_usage(sys.stderr)
        sys.stderr.write(f"icm {args.command}: error: {e}\n")
        return 2
    except (OSError, IcmError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except ValueError as e:
        subparser.print_usage(sys.stderr)
        sys.stderr.write(f"icm {args.command}: error: {e}\n")
        return 2
    return 0

if __name__ == '__main__':
    sys.exit(run())

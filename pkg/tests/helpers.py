import numpy as np


def flat(params):
    return np.concatenate([np.ravel(p) for p in params])


def max_rel_err(a, b, floor=1e-8):
    a, b = flat(a), flat(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def random_net(sizes, seed, act="relu", bias_scale=0.1):
    from playerprice.netcore import NetworkConfig, init_network
    net = init_network(NetworkConfig(tuple(sizes), act, init_seed=seed))
    rng = np.random.default_rng(seed + 1)
    return net.with_params([p if p.ndim == 2 else rng.normal(0, bias_scale, p.shape)
                            for p in net.params()])

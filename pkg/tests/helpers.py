import functools

from nanoccs.pipeline import compile_source, default_registry
from nanoccs.runtime import World, build_components, instantiate


@functools.lru_cache(maxsize=64)
def solved_tree(source: str):
    result = compile_source(source)
    assert result.diagnostics == [] and result.outcome.ok, result.outcome
    return result.solved.tree


def world_from(source: str, seed: int = 0, out_dir=None) -> World:
    return instantiate(solved_tree(source), seed=seed, out_dir=out_dir, registry=default_registry())


def agent_model(count=1, width=32, height=32, boundary="absorbing", arena="rectangular",
                lattice="rectangular", every="1.0", until="false", wander="wander", output="image_sequence"):
    sinks = f"{{ {output}; }}" if output else "{}"
    return (f"geometry: {lattice} {{ width: {width}; height: {height}; }};\n"
            f"boundary: {boundary};\narena: {arena};\noutput {sinks};\n"
            f"initially: scatter {{ count: {count}; description: Agent {{ do: Behavior {{\n"
            f"    action: {wander}; every: {every}; until: {until}; }}; }}; }};\n")


class FixedRng:
    """Stand-in stream that returns scripted choices."""

    def __init__(self, choices):
        self.choices = list(choices)

    def below(self, n):
        return self.choices.pop(0) % n


def world_and_proto(seed=0, **model):
    source = agent_model(count=0, output="", **model)
    world = world_from(source, seed=seed)
    world.step()  # the empty scatter
    tree = solved_tree(source)
    descriptor = build_components(tree).params["initially"][0].params["description"]
    return world, world._prototype(descriptor)

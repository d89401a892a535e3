import pytest

from nanoccs.errors import InvalidValue, KindMismatch, UnknownIdentifier
from nanoccs.pipeline import default_registry
from nanoccs.registry import build_symbol_tables
from nanoccs.semantics import (
    ListObjectNode,
    MapObjectNode,
    PrimitiveObjectNode,
    check_determination,
    configuration,
    iter_nodes,
    resolve,
    translate,
)
from nanoccs.syntax import AssignmentNode, ReferenceNode, parse_source


@pytest.fixture(scope="module")
def tables():
    return build_symbol_tables(default_registry())


def tr(source, tables):
    return translate(parse_source(source), tables)


def test_wanderer_translation(wanderer_source, tables):
    root = tr(wanderer_source, tables)
    assert root.cls == "Project"
    initially = root.children["initially"]
    assert isinstance(initially, ListObjectNode) and initially.member_class == "SetupAction"
    (scatter,) = initially.items
    assert scatter.cls == "Scatter"
    desc = scatter.children["description"]
    assert desc.cls == "AgentDescriptor"
    (behavior,) = desc.children["do"].items
    assert behavior.cls == "Behavior"
    assert behavior.children["action"].cls == "Wander"
    assert behavior.children["every"] == PrimitiveObjectNode("decimal", 1.0)
    assert behavior.children["until"].kind == "predicate"


def test_empty_translation(tables):
    root = tr("", tables)
    assert root == MapObjectNode("Project", None)


def test_typo_is_unknown_identifier_at_span(tables):
    with pytest.raises(UnknownIdentifier) as err:
        tr("geometry: rectangular;\ninitialy: scatter;", tables)
    assert (err.value.span.line, err.value.span.column) == (2, 1)


def test_resolve_examples(tables):
    actions = tables.slots["initially"][0].member_rst
    assert resolve(actions, ReferenceNode("scatter")).produced_class == "Scatter"
    scatter = actions.members["scatter"]
    behavior = scatter.slots["description"][0].members["Agent"].slots["do"][0].member_rst.members["Behavior"]
    assert resolve(behavior.slots["action"][0], ReferenceNode("wander")).produced_class == "Wander"
    with pytest.raises(UnknownIdentifier):
        resolve(actions, ReferenceNode("teleport"))


@pytest.mark.parametrize("source, error", [
    ("geometry: 5;", KindMismatch),
    ("boundary: periodic { width: 3; };", UnknownIdentifier),
    ("geometry: rectangular { width: 1.5; };", KindMismatch),
    ("geometry: rectangular { width: 0; };", InvalidValue),
    ("initially: scatter { count: -1; };", InvalidValue),
    ("terminate: time;", KindMismatch),
    ("terminate: speed > 3;", UnknownIdentifier),
    ("boundary { absorbing; periodic; };", KindMismatch),
    ("initially: scatter { description: Agent { do: Behavior { every: 0; }; }; };", InvalidValue),
])
def test_translation_errors(source, error, tables):
    with pytest.raises(error) as err:
        tr(source, tables)
    assert err.value.span is not None


def test_integer_widens_to_decimal(tables):
    root = tr("initially: scatter { description: Agent { do: Behavior { action: wander; every: 2; }; }; };", tables)
    behavior = root.children["initially"].items[0].children["description"].children["do"].items[0]
    assert behavior.children["every"] == PrimitiveObjectNode("decimal", 2.0)


def test_wanderer_is_determined(wanderer_source, tables):
    assert check_determination(tr(wanderer_source, tables), default_registry()) == []


def test_missing_action_is_underdetermined(tables):
    source = "initially: scatter { description: Agent { do: Behavior { every: 1.0; }; }; };"
    diags = check_determination(tr(source, tables), default_registry())
    assert [(d.kind, d.path) for d in diags] == [
        ("underdetermined", "Project/initially/scatter[0]/description/do/Behavior[0]/action")]
    assert diags[0].span.line == 1


def test_missing_required_by_slot_scan_oracle(tables):
    # oracle: list every required slot of every class in the registry, delete it
    # from an otherwise complete model, and expect exactly that path back
    full = ("initially: scatter { description: Agent { do: Behavior { action: wander; }; }; };")
    cases = {
        "description": full.replace("description: Agent { do: Behavior { action: wander; }; };", ""),
        "action": full.replace("action: wander;", ""),
    }
    registry = default_registry()
    required = {s.name for c in registry.classes.values() for s in c.slots if s.required}
    assert required == set(cases)
    for name, source in cases.items():
        diags = check_determination(tr(source, tables), registry)
        assert len(diags) == 1 and diags[0].path.endswith("/" + name)


def test_duplicate_slot_is_overdetermined(tables):
    diags = check_determination(tr("geometry: rectangular;\ngeometry: hexagonal;", tables), default_registry())
    assert [(d.kind, d.path) for d in diags] == [("overdetermined", "Project/geometry")]
    assert diags[0].span.line == 2
    assert diags[0].render() == "Project/geometry: 'geometry' is specified more than once (2:1)"


def test_node_count_of_single_wanderer(wanderer_source, tables):
    # one object node per bound slot value or list member:
    # Project, initially, Scatter, description, do, Behavior, action, every, until
    nodes = list(iter_nodes(tr(wanderer_source, tables), "Project"))
    assert len(nodes) == 9


def test_named_children_are_declared_slots(wanderer_source, tables):
    registry = default_registry()
    for _, node in iter_nodes(tr(wanderer_source, tables), "Project"):
        if isinstance(node, MapObjectNode):
            assert set(node.children) <= set(registry[node.cls].slot_names)
            assert node.cls in registry.classes


def test_translation_is_deterministic(wanderer_source, tables):
    ast = parse_source(wanderer_source)
    a, b = translate(ast, tables), translate(ast, tables)
    assert a == b and configuration(a) == configuration(b)


def test_translate_rejects_non_root(tables):
    with pytest.raises(KindMismatch):
        translate(AssignmentNode("Project", ()), tables)

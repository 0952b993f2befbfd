import pytest
from hypothesis import given, strategies as st

from mobitel.broker import BrokerError, PushBroker, UnknownDeviceError


@pytest.fixture
def broker():
    return PushBroker(homepage_url="http://example.test/")


def test_register_and_push_one(broker):
    broker.register_device("reg-1", "hash-1")
    assert broker.push("title", "body", target="reg-1") == 1
    inbox = broker.poll_inbox("reg-1")
    assert len(inbox) == 1
    msg = inbox[0]
    assert (msg.title, msg.body, msg.to_regid) == ("title", "body", "reg-1")
    assert msg.click_url == "http://example.test/"


def test_fifo_order(broker):
    broker.register_device("reg-1", "hash-1")
    for i in range(5):
        broker.push(f"t{i}", "b", target="reg-1")
    assert [m.title for m in broker.poll_inbox("reg-1")] == [f"t{i}" for i in range(5)]


def test_poll_drains(broker):
    broker.register_device("reg-1", "hash-1")
    broker.push("t", "b", target="reg-1")
    assert len(broker.poll_inbox("reg-1")) == 1
    assert broker.poll_inbox("reg-1") == []


def test_broadcast_counts_all_devices(broker):
    for i in range(3):
        broker.register_device(f"reg-{i}", f"hash-{i}")
    assert broker.push("t", "b", target="all") == 3
    for i in range(3):
        assert len(broker.poll_inbox(f"reg-{i}")) == 1


def test_push_unknown_regid_delivers_zero(broker):
    broker.register_device("reg-1", "hash-1")
    assert broker.push("t", "b", target="ghost") == 0
    assert broker.poll_inbox("reg-1") == []


def test_poll_unknown_device(broker):
    with pytest.raises(UnknownDeviceError, match="unknown device"):
        broker.poll_inbox("ghost")


def test_register_idempotent(broker):
    broker.register_device("reg-1", "hash-1")
    broker.push("t", "b", target="reg-1")
    broker.register_device("reg-1", "hash-1")
    # Re-registering the same pair keeps the pending inbox.
    assert len(broker.poll_inbox("reg-1")) == 1


def test_new_regid_replaces_old(broker):
    broker.register_device("reg-old", "hash-1")
    broker.push("t", "b", target="reg-old")
    broker.register_device("reg-new", "hash-1")
    assert broker.push("t2", "b", target="reg-old") == 0
    with pytest.raises(UnknownDeviceError):
        broker.poll_inbox("reg-old")
    assert broker.push("t3", "b", target="reg-new") == 1


def test_empty_regid_rejected(broker):
    with pytest.raises(BrokerError, match="empty registration id"):
        broker.register_device("", "hash-1")


def test_version_staleness(broker):
    broker.register_device("reg-1", "hash-1", app_version=3)
    assert broker.is_registered("hash-1", app_version=3)
    assert not broker.is_registered("hash-1", app_version=4)
    assert not broker.is_registered("ghost", app_version=3)
    broker.register_device("reg-1", "hash-1", app_version=4)
    assert broker.is_registered("hash-1", app_version=4)


@given(
    st.lists(
        st.tuples(st.sampled_from(["a", "b", "c"]), st.sampled_from(["push", "poll"])),
        max_size=30,
    )
)
def test_interleaved_ops_conserve_messages(ops):
    # Across any interleaving, messages pushed to a device either sit in
    # its inbox or have been polled exactly once, in order.
    broker = PushBroker()
    for name in ("a", "b", "c"):
        broker.register_device(f"reg-{name}", f"hash-{name}")
    pushed = {name: 0 for name in ("a", "b", "c")}
    polled = {name: [] for name in ("a", "b", "c")}
    for name, op in ops:
        if op == "push":
            broker.push(f"m{pushed[name]}", "b", target=f"reg-{name}")
            pushed[name] += 1
        else:
            polled[name].extend(m.title for m in broker.poll_inbox(f"reg-{name}"))
    for name in ("a", "b", "c"):
        remaining = [m.title for m in broker.poll_inbox(f"reg-{name}")]
        assert polled[name] + remaining == [f"m{i}" for i in range(pushed[name])]

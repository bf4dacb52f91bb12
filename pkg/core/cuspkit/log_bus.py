import threading
from collections import deque
from typing import Any, Deque, Dict, List, Optional, ParamSpec, Protocol, Set, Tuple

VariArgs = ParamSpec('VariArgs')


class SingletonMeta(type):
    """
    A metaclass that creates a Singleton base type when called.
    Instances are keyed by qualified class name.
    """
    _instances: Dict[str, object] = {}
    _instances_lock = threading.RLock()

    def __call__(cls, *args, **kwargs):
        with SingletonMeta._instances_lock:
            if cls.__qualname__ not in cls._instances:
                cls._instances[cls.__qualname__] = super(SingletonMeta, cls).__call__(*args, **kwargs)
        return cls._instances[cls.__qualname__]


class SubscriberCallback(Protocol):
    """Signature every subscriber has to accept."""
    def __call__(self, event_name: str, *args: VariArgs.args, **kwargs: VariArgs.kwargs) -> None:
        ...


class EventBus(metaclass=SingletonMeta):
    """
    Process-local publish/subscribe hub.

    Subscriptions are either exact event names or prefix patterns ending in ``.*``;
    the bare pattern ``*`` receives everything. All changes and deliveries hold one
    re-entrant lock, so subscribers may publish from inside a callback.
    """
    _subscribers: Dict[str, List[SubscriberCallback]]

    def __init__(self) -> None:
        self._subscribers = {}
        self._lock = threading.RLock()

    @staticmethod
    def _matches(pattern: str, event_name: str) -> bool:
        if pattern == "*":
            return True
        if pattern.endswith(".*"):
            return event_name.startswith(pattern[:-2])
        return pattern == event_name

    def subscribe(self, pattern: str, callback: SubscriberCallback) -> bool:
        """Subscribe a callback to an event name or prefix pattern.

        Args:
            pattern: Exact event name, ``prefix.*`` or ``*``.
            callback: Invoked as ``callback(event_name, *args, **kwargs)``.

        Returns:
            True if the callback was added, False if it was already subscribed to this pattern.
        """
        with self._lock:
            callbacks = self._subscribers.setdefault(pattern, [])
            if callback in callbacks:
                return False
            callbacks.append(callback)
            return True

    def unsubscribe(self, pattern: str, callback: SubscriberCallback) -> bool:
        """Remove a callback; returns False when it was not subscribed."""
        with self._lock:
            callbacks = self._subscribers.get(pattern, [])
            if callback not in callbacks:
                return False
            callbacks.remove(callback)
            if not callbacks:
                del self._subscribers[pattern]
            return True

    def publish(self, event_name: str, *args: Any, **kwargs: Any) -> bool:
        """Deliver an event to all matching subscribers.

        Returns:
            True if at least one subscriber received the event.
        """
        with self._lock:
            return self._dispatch(event_name, *args, **kwargs)

    def _dispatch(self, event_name: str, *args: Any, **kwargs: Any) -> bool:
        seen: Set[int] = set()
        for pattern, callbacks in list(self._subscribers.items()):
            if not self._matches(pattern, event_name):
                continue
            for callback in list(callbacks):
                if id(callback) in seen:
                    continue
                seen.add(id(callback))
                callback(event_name, *args, **kwargs)
        return len(seen) > 0


class BufferedEventBus(EventBus):
    """
    Event bus that keeps undelivered events (up to ``buffer_size``) and replays
    them, in order, as soon as a matching subscriber appears.
    """
    _buffer: Deque[Tuple[str, Tuple[Any, ...], Dict[str, Any]]]

    def __init__(self, buffer_size: int = 255) -> None:
        super().__init__()
        self._buffer = deque(maxlen=buffer_size)

    def subscribe(self, pattern: str, callback: SubscriberCallback) -> bool:
        with self._lock:
            added = super().subscribe(pattern, callback)
            self._flush_buffer()
            return added

    def publish(self, event_name: str, *args: Any, **kwargs: Any) -> bool:
        with self._lock:
            delivered = super().publish(event_name, *args, **kwargs)
            if not delivered:
                self._buffer.append((event_name, args, kwargs))
            return delivered

    def _flush_buffer(self, drop_prefix: Optional[str] = None) -> int:
        """Replay buffered events; returns how many left the buffer."""
        removed = 0
        for _ in range(len(self._buffer)):
            event_name, args, kwargs = self._buffer.popleft()
            if drop_prefix is not None and event_name.startswith(drop_prefix):
                removed += 1
            elif self._dispatch(event_name, *args, **kwargs):
                removed += 1
            else:
                self._buffer.append((event_name, args, kwargs))
        return removed

    def drop_buffered(self, prefix: str = "") -> int:
        """Discard buffered events whose name starts with ``prefix`` without delivering them."""
        with self._lock:
            return self._flush_buffer(drop_prefix=prefix)

    @property
    def buffered(self) -> int:
        return len(self._buffer)


class CuspLogBus(BufferedEventBus):
    """
    Diagnostic channel of the numerical library.

    Library code never configures log sinks; it publishes here and the CLI
    (or a test) decides where events go. The event name is the ``source``.
    """

    @staticmethod
    def log_message(message: str, source: str = "cuspkit", action: str = "log_bus.entry", **kwargs: Any) -> None:
        """Publish a message from ``source`` describing ``action`` with extra context."""
        CuspLogBus().publish(source, log_message=message, action=action, **kwargs)

    @staticmethod
    def trace(message: str, source: str = "cuspkit", action: str = "log_bus.trace", **kwargs: Any) -> None:
        CuspLogBus.log_message(message, source, action, severity="TRACE", **kwargs)

    @staticmethod
    def debug(message: str, source: str = "cuspkit", action: str = "log_bus.debug", **kwargs: Any) -> None:
        CuspLogBus.log_message(message, source, action, severity="DEBUG", **kwargs)

    @staticmethod
    def info(message: str, source: str = "cuspkit", action: str = "log_bus.info", **kwargs: Any) -> None:
        CuspLogBus.log_message(message, source, action, severity="INFO", **kwargs)

    @staticmethod
    def warn(message: str, source: str = "cuspkit", action: str = "log_bus.warn", **kwargs: Any) -> None:
        CuspLogBus.log_message(message, source, action, severity="WARN", **kwargs)

    @staticmethod
    def error(message: str, source: str = "cuspkit", action: str = "log_bus.error", **kwargs: Any) -> None:
        CuspLogBus.log_message(message, source, action, severity="ERROR", **kwargs)

    @staticmethod
    def fatal(message: str, source: str = "cuspkit", action: str = "log_bus.fatal", **kwargs: Any) -> None:
        CuspLogBus.log_message(message, source, action, severity="FATAL", **kwargs)

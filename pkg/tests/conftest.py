import asyncio
import inspect


def pytest_pyfunc_call(pyfuncitem):
    """Run coroutine test functions on a fresh event loop (no plugin needed)."""
    func = pyfuncitem.obj
    if inspect.iscoroutinefunction(func):
        kwargs = {
            name: pyfuncitem.funcargs[name] for name in pyfuncitem._fixtureinfo.argnames
        }
        asyncio.run(func(**kwargs))
        return True
    return None

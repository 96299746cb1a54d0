"""
NSCH Backend - Flask应用工厂
"""

import os

from flask import Flask, jsonify, request

from .config import Config
from .utils.errors import ConfigError, SimulationError
from .utils.logger import setup_logger, get_logger


def _register_error_handlers(app: Flask):
    """蓝图中未捕获的模拟异常统一转成 {"success": false, ...}"""

    @app.errorhandler(SimulationError)
    def handle_simulation_error(e: SimulationError):
        get_logger('nsch.api').error(f"{type(e).__name__}: {e}")
        body = {"success": False, "error": str(e), "type": type(e).__name__}
        if isinstance(e, ConfigError):
            body.update(key=e.key, lineno=e.lineno)
            return jsonify(body), 400
        return jsonify(body), 500

    @app.errorhandler(404)
    def handle_not_found(e):
        return jsonify({"success": False, "error": f"路径不存在: {request.path}"}), 404


def create_app(config_class=Config):
    """
    创建 Flask 应用

    只注册 /api/simulation 蓝图和 /health；数值计算在 SimulationManager 的线程池里进行。
    """
    app = Flask(__name__)
    app.config.from_object(config_class)

    # 中文直接输出，不转成 \uXXXX
    if hasattr(app, 'json') and hasattr(app.json, 'ensure_ascii'):
        app.json.ensure_ascii = False

    logger = setup_logger('nsch')

    # debug 模式下只在 reloader 子进程中打印
    should_log_startup = not app.config.get('DEBUG', False) or os.environ.get('WERKZEUG_RUN_MAIN') == 'true'
    if should_log_startup:
        logger.info(f"NSCH Backend 启动中... 输出目录: {config_class.OUTPUT_ROOT}, "
                    f"并发模拟数: {config_class.MAX_CONCURRENT_RUNS}")

    @app.before_request
    def log_request():
        get_logger('nsch.request').debug(f"请求: {request.method} {request.path}")

    @app.after_request
    def log_response(response):
        get_logger('nsch.request').debug(f"响应: {response.status_code} {request.path}")
        return response

    from .api import simulation_bp
    app.register_blueprint(simulation_bp, url_prefix='/api/simulation')
    _register_error_handlers(app)

    @app.route('/health')
    def health():
        return {'status': 'ok', 'service': 'NSCH Backend'}

    return app

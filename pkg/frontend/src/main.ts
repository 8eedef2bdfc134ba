import { HEARTBEAT_HZ, SessionClient } from './client.js'
import { DEFAULT_INPUT_CONFIG } from './input.js'
import { renderFrame, WIDTH, HEIGHT } from './render.js'
import { applyEvent, applyState, createViewModel } from './view.js'

const view = createViewModel()

const client = new SessionClient({
    onMessage: (msg) => {
        if (msg.type === 'state') applyState(view, msg)
        else if (msg.type === 'event') applyEvent(view, msg)
    },
    onStatus: (connected) => {
        view.status = connected ? 'connected' : 'closed'
    },
})

const avatar = () =>
    view.latest
        ? { x: view.latest.participant.x, y: view.latest.participant.y }
        : { x: 0, y: 0 }

const connect = (): void => {
    const proto = location.protocol === 'https:' ? 'wss' : 'ws'
    const socket = new WebSocket(`${proto}://${location.host}/session`)
    socket.onopen = () => client.attach(socket)
    socket.onmessage = (ev) => client.handleRaw(String(ev.data))
    socket.onclose = () => {
        client.detach()
        view.status = 'closed'
        setTimeout(connect, 1000)
    }
}

const main = (): void => {
    const canvas = document.getElementById('scene') as HTMLCanvasElement
    canvas.width = WIDTH
    canvas.height = HEIGHT
    const ctx = canvas.getContext('2d')!

    const cfg = document.getElementById('config')
    if (cfg) {
        const { walkSpeed, reach, handHeight } = DEFAULT_INPUT_CONFIG
        cfg.textContent =
            `walk ${walkSpeed} m/s · controller = avatar + ${reach} m along aim @ z=${handHeight} m`
    }

    window.addEventListener('keydown', (e) => {
        view.input.keys.add(e.key.toLowerCase())
        client.pushInput(view.input, avatar())
    })
    window.addEventListener('keyup', (e) => {
        view.input.keys.delete(e.key.toLowerCase())
        client.pushInput(view.input, avatar())
    })
    canvas.addEventListener('pointermove', (e) => {
        const rect = canvas.getBoundingClientRect()
        const px = e.clientX - rect.left - rect.width / 2
        const py = e.clientY - rect.top - rect.height / 2
        if (px !== 0 || py !== 0) view.input.aim = { x: px, y: -py }
        client.pushInput(view.input, avatar())
    })
    canvas.addEventListener('pointerdown', () => {
        view.input.triggerHeld = true
        client.pushInput(view.input, avatar())
    })
    window.addEventListener('pointerup', () => {
        view.input.triggerHeld = false
        client.pushInput(view.input, avatar())
    })
    window.addEventListener('beforeunload', () => client.bye())

    setInterval(() => client.heartbeat(view.input, avatar()), 1000 / HEARTBEAT_HZ)

    const frame = (): void => {
        if (view.latest) {
            view.camera.center = avatar() // follow the participant
        }
        renderFrame(ctx, view)
        requestAnimationFrame(frame)
    }
    requestAnimationFrame(frame)
    connect()
}

main()
